#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

#include "tropfact/experiment.hpp"
#include "tropfact/io.hpp"
#include "tropfact/metrics.hpp"

namespace tropfact {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string fmt2(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.2f", x);
  return buf;
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out += c;
    }
  }
  return out;
}

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                          "#8c564b", "#e377c2", "#17becf", "#bcbd22", "#7f7f7f"};

struct CriterionData {
  std::string name;
  bool lower_is_better = true;
  Matrix scores;  // methods x datasets
};

// Methods present with NE in every ranked dataset, in first-seen order.
std::vector<std::string> ranked_methods(const std::vector<const json*>& datasets) {
  std::vector<std::string> methods;
  if (datasets.empty()) return methods;
  for (const auto& m : (*datasets.front())["methods"]) {
    const std::string name = m["name"].get<std::string>();
    bool everywhere = true;
    for (const json* d : datasets) {
      const auto& ms = (*d)["methods"];
      everywhere &= std::any_of(ms.begin(), ms.end(), [&](const json& x) {
        return x["name"] == name && x.contains("final_ne");
      });
    }
    if (everywhere) methods.push_back(name);
  }
  return methods;
}

const json& method_entry(const json& dataset, const std::string& name) {
  for (const auto& m : dataset["methods"])
    if (m["name"] == name) return m;
  throw std::invalid_argument("method " + name + " missing");
}

ordered_json criterion_report(const std::string& name, const RankTable& table,
                              const std::vector<std::string>& dataset_names, std::uint64_t seed,
                              std::size_t resamples) {
  ordered_json c;
  c["criterion"] = name;
  const std::size_t k = table.methods.size();
  const std::size_t n = dataset_names.size();
  c["methods"] = table.methods;
  c["datasets"] = dataset_names;
  ordered_json ranks = ordered_json::array();
  for (std::size_t m = 0; m < k; ++m) {
    std::vector<double> row(table.ranks.row(m).begin(), table.ranks.row(m).end());
    ranks.push_back(row);
  }
  c["ranks"] = ranks;
  const auto avg = table.average();
  c["average_ranks"] = avg;
  c["cd"] = k >= 2 ? json(nemenyi_cd(k, n, 0.05)) : json(nullptr);
  ordered_json ci = ordered_json::array();
  for (std::size_t m = 0; m < k; ++m) {
    const auto row = table.ranks.row(m);
    const Interval iv = bootstrap_ci(std::span<const double>(row.data(), row.size()), resamples,
                                     0.95, seed + m);
    ci.push_back({iv.low, iv.high});
  }
  c["average_rank_ci95"] = ci;
  return c;
}

}  // namespace

ordered_json rank_report(const json& results, std::uint64_t seed, std::size_t resamples) {
  std::vector<const json*> datasets;
  std::vector<std::string> names;
  for (const auto& d : results.at("datasets")) {
    if (!d.value("ne_defined", false)) continue;
    datasets.push_back(&d);
    names.push_back(d["name"].get<std::string>());
  }
  ordered_json report;
  report["datasets_ranked"] = names;
  ordered_json criteria = ordered_json::array();
  const auto methods = ranked_methods(datasets);
  report["methods"] = methods;
  if (methods.empty() || datasets.empty()) {
    report["criteria"] = criteria;
    return report;
  }
  Matrix ttr(methods.size(), datasets.size());
  Matrix fne(methods.size(), datasets.size());
  for (std::size_t m = 0; m < methods.size(); ++m) {
    for (std::size_t d = 0; d < datasets.size(); ++d) {
      const json& e = method_entry(*datasets[d], methods[m]);
      ttr(m, d) = e["time_to_reach"].is_number() ? e["time_to_reach"].get<double>() : kInf;
      fne(m, d) = e["final_ne"].get<double>();
    }
  }
  const RankTable time_ranks = rank_methods(ttr, true, methods);
  const RankTable ne_ranks = rank_methods(fne, true, methods);
  RankTable combined{methods, Matrix(methods.size(), datasets.size())};
  for (std::size_t m = 0; m < methods.size(); ++m)
    for (std::size_t d = 0; d < datasets.size(); ++d)
      combined.ranks(m, d) = 0.5 * (time_ranks.ranks(m, d) + ne_ranks.ranks(m, d));

  criteria.push_back(criterion_report("time_to_reach", time_ranks, names, seed, resamples));
  criteria.push_back(criterion_report("final_ne", ne_ranks, names, seed + 1000, resamples));
  criteria.push_back(criterion_report("combined", combined, names, seed + 2000, resamples));
  report["criteria"] = criteria;
  return report;
}

std::string rank_report_text(const json& report) {
  std::string out;
  for (const auto& c : report.at("criteria")) {
    out += "criterion: " + c["criterion"].get<std::string>() + "\n";
    const auto methods = c["methods"].get<std::vector<std::string>>();
    const auto datasets = c["datasets"].get<std::vector<std::string>>();
    std::size_t w = 6;
    for (const auto& m : methods) w = std::max(w, m.size());
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%-*s %9s %17s", static_cast<int>(w), "method", "avg_rank",
                  "ci95");
    out += buf;
    for (const auto& d : datasets) out += " " + d;
    out += '\n';
    for (std::size_t m = 0; m < methods.size(); ++m) {
      const double lo = c["average_rank_ci95"][m][0].get<double>();
      const double hi = c["average_rank_ci95"][m][1].get<double>();
      std::snprintf(buf, sizeof(buf), "%-*s %9.3f   [%5.2f, %5.2f]", static_cast<int>(w),
                    methods[m].c_str(), c["average_ranks"][m].get<double>(), lo, hi);
      out += buf;
      for (const auto& r : c["ranks"][m]) out += " " + fmt2(r.get<double>());
      out += '\n';
    }
    if (c["cd"].is_number()) {
      std::snprintf(buf, sizeof(buf), "CD (alpha=0.05, k=%zu, N=%zu): %.3f\n", methods.size(),
                    datasets.size(), c["cd"].get<double>());
      out += buf;
    }
    out += '\n';
  }
  if (report.at("criteria").empty()) out += "no datasets with a defined normalized error\n";
  return out;
}

std::size_t write_rank_outputs(const std::filesystem::path& bundle,
                               const std::filesystem::path& out_dir) {
  const auto path = bundle / "results.json";
  if (!std::filesystem::exists(path)) return 0;
  const json results = json::parse(read_text(path));
  const std::uint64_t seed = results["config"].value("seed", std::uint64_t{0});
  const std::size_t resamples = results["config"].value("bootstrap_resamples", std::size_t{1000});
  const ordered_json report = rank_report(results, seed, resamples);
  write_text(out_dir / "ranks.json", report.dump(2) + "\n");
  write_text(out_dir / "ranks.txt", rank_report_text(report));
  return 2;
}

std::string ne_plot_svg(const json& d, const std::string& clock) {
  const double W = 720, H = 440, L = 70, R = 190, T = 40, B = 60;
  const double pw = W - L - R, ph = H - T - B;

  const std::string title = d.value("name", std::string("dataset"));
  std::vector<double> grid;
  double lo = 0.0, hi = 1.0;
  bool any = false;
  for (const auto& m : d["methods"]) {
    if (!m.contains("ne")) continue;
    for (const char* key : {"median", "q1", "q3"}) {
      for (const auto& v : m["ne"][key]) {
        const double x = v.get<double>();
        if (!std::isfinite(x)) continue;
        lo = std::min(lo, x);
        hi = std::max(hi, x);
        any = true;
      }
    }
  }
  if (d.contains("grid")) grid = d["grid"].get<std::vector<double>>();
  if (d.contains("perfect_ne")) lo = std::min(lo, d["perfect_ne"].get<double>());
  if (hi - lo < 1e-12) hi = lo + 1.0;
  const double pad = 0.05 * (hi - lo);
  lo -= pad;
  hi += pad;
  const double t_max = grid.empty() ? 1.0 : std::max(grid.back(), 1e-12);
  const auto X = [&](double t) { return L + pw * t / t_max; };
  const auto Y = [&](double v) { return T + ph * (hi - v) / (hi - lo); };

  std::string s;
  s += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt2(W) + "\" height=\"" + fmt2(H) +
       "\" viewBox=\"0 0 " + fmt2(W) + " " + fmt2(H) + "\">\n";
  s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s += "<text x=\"" + fmt2(L + pw / 2) + "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">" +
       xml_escape(title) + "</text>\n";
  s += "<rect x=\"" + fmt2(L) + "\" y=\"" + fmt2(T) + "\" width=\"" + fmt2(pw) + "\" height=\"" +
       fmt2(ph) + "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 5; ++i) {
    const double t = t_max * i / 5.0, v = lo + (hi - lo) * i / 5.0;
    s += "<text x=\"" + fmt2(X(t)) + "\" y=\"" + fmt2(T + ph + 18) +
         "\" text-anchor=\"middle\" font-size=\"11\">" + fmt2(t) + "</text>\n";
    s += "<text x=\"" + fmt2(L - 6) + "\" y=\"" + fmt2(Y(v) + 4) +
         "\" text-anchor=\"end\" font-size=\"11\">" + fmt2(v) + "</text>\n";
  }
  s += "<text x=\"" + fmt2(L + pw / 2) + "\" y=\"" + fmt2(H - 16) +
       "\" text-anchor=\"middle\" font-size=\"13\">" + xml_escape(clock) + "</text>\n";
  s += "<text x=\"18\" y=\"" + fmt2(T + ph / 2) + "\" text-anchor=\"middle\" font-size=\"13\" " +
       "transform=\"rotate(-90 18 " + fmt2(T + ph / 2) + ")\">NE</text>\n";

  // Baseline final NE is 0 by construction.
  if (any) {
    s += "<line class=\"baseline-final\" x1=\"" + fmt2(L) + "\" y1=\"" + fmt2(Y(0)) + "\" x2=\"" +
         fmt2(L + pw) + "\" y2=\"" + fmt2(Y(0)) +
         "\" stroke=\"black\" stroke-dasharray=\"6,4\"/>\n";
  }
  if (d.contains("perfect_ne")) {
    const double p = d["perfect_ne"].get<double>();
    s += "<line class=\"perfect\" x1=\"" + fmt2(L) + "\" y1=\"" + fmt2(Y(p)) + "\" x2=\"" +
         fmt2(L + pw) + "\" y2=\"" + fmt2(Y(p)) +
         "\" stroke=\"grey\" stroke-dasharray=\"2,3\"/>\n";
  }

  std::size_t idx = 0;
  double legend_y = T + 10;
  for (const auto& m : d["methods"]) {
    if (!m.contains("ne") || grid.empty()) continue;
    const char* color = kPalette[idx++ % std::size(kPalette)];
    const auto med = m["ne"]["median"].get<std::vector<double>>();
    const auto q1 = m["ne"]["q1"].get<std::vector<double>>();
    const auto q3 = m["ne"]["q3"].get<std::vector<double>>();
    std::string band, line;
    for (std::size_t p = 0; p < grid.size(); ++p)
      band += (p ? " " : "") + fmt2(X(grid[p])) + "," + fmt2(Y(q3[p]));
    for (std::size_t p = grid.size(); p-- > 0;)
      band += " " + fmt2(X(grid[p])) + "," + fmt2(Y(q1[p]));
    for (std::size_t p = 0; p < grid.size(); ++p)
      line += (p ? " " : "") + fmt2(X(grid[p])) + "," + fmt2(Y(med[p]));
    s += std::string("<polygon points=\"") + band + "\" fill=\"" + color +
         "\" fill-opacity=\"0.2\" stroke=\"none\"/>\n";
    s += std::string("<polyline points=\"") + line + "\" fill=\"none\" stroke=\"" + color +
         "\" stroke-width=\"1.5\"/>\n";
    s += "<line x1=\"" + fmt2(L + pw + 12) + "\" y1=\"" + fmt2(legend_y) + "\" x2=\"" +
         fmt2(L + pw + 32) + "\" y2=\"" + fmt2(legend_y) + "\" stroke=\"" + color +
         "\" stroke-width=\"2\"/>\n";
    s += "<text x=\"" + fmt2(L + pw + 38) + "\" y=\"" + fmt2(legend_y + 4) +
         "\" font-size=\"11\">" + xml_escape(m["name"].get<std::string>()) + "</text>\n";
    legend_y += 18;
  }
  s += "</svg>\n";
  return s;
}

std::string cd_diagram_svg(const std::vector<std::string>& methods,
                           const std::vector<double>& average_ranks, double cd,
                           const std::string& title) {
  const std::size_t k = methods.size();
  std::vector<std::size_t> order(k);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return average_ranks[a] < average_ranks[b]; });

  const double W = 640, L = 150, R = 150, axis_y = 80;
  const double lo = 1.0, hi = std::max<double>(2.0, static_cast<double>(k));
  const double pw = W - L - R;
  const auto X = [&](double r) { return L + pw * (r - lo) / (hi - lo); };
  const double H = axis_y + 60 + 20.0 * static_cast<double>(k);

  std::string s;
  s += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt2(W) + "\" height=\"" + fmt2(H) +
       "\" viewBox=\"0 0 " + fmt2(W) + " " + fmt2(H) + "\">\n";
  s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s += "<text x=\"" + fmt2(W / 2) + "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" +
       xml_escape(title) + "</text>\n";
  s += "<line x1=\"" + fmt2(X(lo)) + "\" y1=\"" + fmt2(axis_y) + "\" x2=\"" + fmt2(X(hi)) +
       "\" y2=\"" + fmt2(axis_y) + "\" stroke=\"black\"/>\n";
  for (int r = 1; r <= static_cast<int>(hi); ++r) {
    s += "<line x1=\"" + fmt2(X(r)) + "\" y1=\"" + fmt2(axis_y - 5) + "\" x2=\"" + fmt2(X(r)) +
         "\" y2=\"" + fmt2(axis_y) + "\" stroke=\"black\"/>\n";
    s += "<text x=\"" + fmt2(X(r)) + "\" y=\"" + fmt2(axis_y - 9) +
         "\" text-anchor=\"middle\" font-size=\"11\">" + std::to_string(r) + "</text>\n";
  }
  if (std::isfinite(cd) && cd > 0) {
    s += "<line class=\"cd\" x1=\"" + fmt2(X(lo)) + "\" y1=\"40\" x2=\"" +
         fmt2(X(std::min(hi, lo + cd))) + "\" y2=\"40\" stroke=\"black\" stroke-width=\"2\"/>\n";
    s += "<text x=\"" + fmt2(X(lo)) + "\" y=\"36\" font-size=\"11\">CD = " + fmt2(cd) +
         "</text>\n";
  }
  for (std::size_t p = 0; p < k; ++p) {
    const std::size_t m = order[p];
    const double x = X(average_ranks[m]);
    const double y = axis_y + 30 + 20.0 * static_cast<double>(p);
    const bool left = p < (k + 1) / 2;
    const double tx = left ? L - 10 : W - R + 10;
    s += "<polyline points=\"" + fmt2(x) + "," + fmt2(axis_y) + " " + fmt2(x) + "," + fmt2(y) +
         " " + fmt2(left ? L - 5 : W - R + 5) + "," + fmt2(y) +
         "\" fill=\"none\" stroke=\"black\"/>\n";
    s += "<text x=\"" + fmt2(tx) + "\" y=\"" + fmt2(y + 4) + "\" text-anchor=\"" +
         (left ? "end" : "start") + "\" font-size=\"11\">" + xml_escape(methods[m]) + " (" +
         fmt2(average_ranks[m]) + ")</text>\n";
  }
  // Cliques: maximal runs of methods whose rank spread is below CD.
  std::size_t last_end = 0, bar = 0;
  for (std::size_t a = 0; a < k; ++a) {
    std::size_t b = a;
    while (b + 1 < k && average_ranks[order[b + 1]] - average_ranks[order[a]] < cd) ++b;
    if (b > a && (b > last_end || a == 0)) {
      const double y = axis_y + 12 + 5.0 * static_cast<double>(bar++);
      s += "<line class=\"clique\" x1=\"" + fmt2(X(average_ranks[order[a]]) - 3) + "\" y1=\"" +
           fmt2(y) + "\" x2=\"" + fmt2(X(average_ranks[order[b]]) + 3) + "\" y2=\"" + fmt2(y) +
           "\" stroke=\"black\" stroke-width=\"3\"/>\n";
      last_end = b;
    }
  }
  s += "</svg>\n";
  return s;
}

std::size_t write_plots(const std::filesystem::path& bundle, const std::filesystem::path& out_dir) {
  const auto path = bundle / "results.json";
  if (!std::filesystem::exists(path)) return 0;
  const json results = json::parse(read_text(path));
  const std::string clock = results.value("clock", std::string("sweeps"));
  std::size_t written = 0;
  for (auto d : results.at("datasets")) {
    if (!d.value("ne_defined", false)) continue;
    d["grid"] = results["grid"];
    write_text(out_dir / ("ne_" + d["name"].get<std::string>() + ".svg"), ne_plot_svg(d, clock));
    ++written;
  }
  const std::uint64_t seed = results["config"].value("seed", std::uint64_t{0});
  const std::size_t resamples = results["config"].value("bootstrap_resamples", std::size_t{1000});
  const ordered_json report = rank_report(results, seed, resamples);
  for (const auto& c : report["criteria"]) {
    const auto name = c["criterion"].get<std::string>();
    const double cd = c["cd"].is_number() ? c["cd"].get<double>() : 0.0;
    write_text(out_dir / ("cd_" + name + ".svg"),
               cd_diagram_svg(c["methods"].get<std::vector<std::string>>(),
                              c["average_ranks"].get<std::vector<double>>(), cd,
                              "Average ranks: " + name));
    ++written;
  }
  return written;
}

}  // namespace tropfact
