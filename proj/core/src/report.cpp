#include "cdlab/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "cdlab/errors.hpp"

namespace cdlab {

using nlohmann::json;

std::vector<StatRow> report_rows(const ExperimentReport& report) {
  std::vector<StatRow> rows;
  const std::size_t reps = report.config.replications;
  const std::uint64_t seed = report.config.root_seed;
  const std::string& e = report.estimator;
  auto add = [&](std::size_t n, std::string est, std::string stat, double value, double se) {
    rows.push_back({n, std::move(est), std::move(stat), value, se, reps, seed});
  };
  for (const SizeResult& s : report.sizes) {
    add(s.n, e + "/last", "mse", s.mse_last.mean, s.mse_last.std_error);
    add(s.n, e + "/average", "mse", s.mse_average.mean, s.mse_average.std_error);
    add(s.n, e + "/last", "variance_ratio", s.variance_ratio_last, s.variance_ratio_last_stderr);
    add(s.n, e + "/average", "variance_ratio", s.variance_ratio_average, s.variance_ratio_average_stderr);
    for (const auto& [epoch, est] : s.mse_checkpoints) {
      add(s.n, e + "/epoch_" + std::to_string(epoch), "mse", est.mean, est.std_error);
    }
    add(s.n, e, "projection_hit_fraction", s.projection_hits.mean, s.projection_hits.std_error);
    add(s.n, e, "m", static_cast<double>(s.m), 0.0);
    add(s.n, e, "C", s.C, 0.0);
    if (s.bound) {
      add(s.n, "bound", "online_bound", s.bound->total, 0.0);
      add(s.n, "bound", "online_bound_transient", s.bound->transient, 0.0);
      add(s.n, "bound", "online_bound_stationary", s.bound->stationary, 0.0);
    }
  }
  return rows;
}

namespace {

std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void check_field(const std::string& s) {
  if (s.find_first_of(",\n\r\"") != std::string::npos) {
    throw InvalidInput("format_csv: field '" + s + "' contains a reserved character");
  }
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

template <class T>
T parse_integer(const std::string& s, const char* what) {
  T v{};
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) throw InvalidInput(std::string("parse_csv: bad ") + what);
  return v;
}

double parse_real(const std::string& s) {
  // strtod also accepts inf and nan as written by %g
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) throw InvalidInput("parse_csv: bad number '" + s + "'");
  return v;
}

json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json mean_json(const MeanEstimate& m) { return {{"mean", number(m.mean)}, {"stderr", number(m.std_error)}}; }

json fit_json(const std::optional<RateFit>& f) {
  if (!f) return nullptr;
  return {{"slope", f->slope}, {"intercept", f->intercept}, {"slope_stderr", f->slope_stderr}};
}

json vector_json(const Vector& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(number(v[i]));
  return a;
}

}  // namespace

std::string format_csv(const std::vector<StatRow>& rows) {
  std::string out = std::string(kCsvHeader) + "\n";
  for (const StatRow& r : rows) {
    check_field(r.estimator);
    check_field(r.stat);
    out += std::to_string(r.n) + "," + r.estimator + "," + r.stat + "," + fmt17(r.value) + "," + fmt17(r.std_error) +
           "," + std::to_string(r.replications) + "," + std::to_string(r.seed) + "\n";
  }
  return out;
}

std::vector<StatRow> parse_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader) throw InvalidInput("parse_csv: missing or wrong header");
  std::vector<StatRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split(line);
    if (f.size() != 7) throw InvalidInput("parse_csv: expected 7 fields in '" + line + "'");
    StatRow r;
    r.n = parse_integer<std::size_t>(f[0], "n");
    r.estimator = f[1];
    r.stat = f[2];
    r.value = parse_real(f[3]);
    r.std_error = parse_real(f[4]);
    r.replications = parse_integer<std::size_t>(f[5], "replications");
    r.seed = parse_integer<std::uint64_t>(f[6], "seed");
    rows.push_back(std::move(r));
  }
  return rows;
}

json summary_json(const ExperimentReport& report) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["name"] = report.config.name;
  j["estimator"] = report.estimator;
  j["config"] = to_json(report.config);

  json sizes = json::array();
  for (const SizeResult& s : report.sizes) {
    json row{{"n", s.n},
             {"m", s.m},
             {"C", number(s.C)},
             {"mse_last", mean_json(s.mse_last)},
             {"mse_average", mean_json(s.mse_average)},
             {"variance_ratio_last", {{"value", number(s.variance_ratio_last)},
                                      {"stderr", number(s.variance_ratio_last_stderr)}}},
             {"variance_ratio_average", {{"value", number(s.variance_ratio_average)},
                                         {"stderr", number(s.variance_ratio_average_stderr)}}},
             {"projection_hit_fraction", mean_json(s.projection_hits)}};
    json cps = json::array();
    for (const auto& [epoch, est] : s.mse_checkpoints) cps.push_back({{"epoch", epoch}, {"mse", mean_json(est)}});
    row["mse_checkpoints"] = cps;
    if (s.bound) {
      row["online_bound"] = {{"total", number(s.bound->total)},
                             {"transient", number(s.bound->transient)},
                             {"stationary", number(s.bound->stationary)}};
    } else {
      row["online_bound"] = nullptr;
    }
    sizes.push_back(row);
  }
  j["sizes"] = sizes;
  j["slopes"] = {{"last", fit_json(report.slope_last)}, {"average", fit_json(report.slope_average)}};
  j["fisher_inverse_trace"] = number(report.fisher_inverse_trace);

  json constants = json::object();
  if (report.theory) {
    const TheoryConstants& t = *report.theory;
    constants["theory"] = {{"mu", number(t.mu)},
                           {"L", number(t.L)},
                           {"sigma", number(t.sigma)},
                           {"C_chi", number(t.C_chi)},
                           {"chi2_overflow", t.chi2_overflow},
                           {"grid_points", t.grid_points}};
  }
  if (report.alpha) {
    const AlphaSup& a = *report.alpha;
    constants["alpha"] = {{"value", number(a.value)},
                          {"stderr", number(a.std_error)},
                          {"psi", vector_json(a.psi)},
                          {"component", a.label},
                          {"grid_points", a.grid_points},
                          {"exact", a.exact}};
  }
  if (report.alpha_upper) constants["alpha_used"] = number(*report.alpha_upper);
  if (report.norms) {
    constants["logZ_norms"] = {{"norm_1", number(report.norms->norm_1)},
                               {"norm_2", number(report.norms->norm_2)},
                               {"norm_3", number(report.norms->norm_3)}};
  }
  if (report.constants) {
    const BoundConstants& k = *report.constants;
    constants["derived"] = {{"m", k.m},
                            {"mu_tilde", number(k.mu_tilde)},
                            {"L_tilde", number(k.L_tilde)},
                            {"sigma_tilde_sq", number(k.sigma_tilde_sq)}};
  }
  j["constants"] = constants;
  j["warnings"] = report.warnings;
  j["condition_violated"] = report.condition_violated;
  j["wall_seconds"] = report.wall_seconds;
  return j;
}

std::string render_svg(const ExperimentReport& report) {
  constexpr double W = 640, H = 440, left = 70, right = 20, top = 30, bottom = 50;
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

  std::vector<double> xs, ys;
  for (const SizeResult& s : report.sizes) {
    xs.push_back(static_cast<double>(s.n));
    for (double v : {s.mse_last.mean, s.mse_average.mean}) {
      if (v > 0.0 && std::isfinite(v)) ys.push_back(v);
    }
  }
  if (xs.empty() || ys.empty()) {
    os << "<text x=\"" << W / 2 << "\" y=\"" << H / 2 << "\" text-anchor=\"middle\">no data</text>\n</svg>\n";
    return os.str();
  }
  // the bound can be astronomically large; keep the axis anchored on the data
  double ylo = std::log10(*std::min_element(ys.begin(), ys.end())) - 0.3;
  double yhi = std::log10(*std::max_element(ys.begin(), ys.end())) + 0.3;
  for (const SizeResult& s : report.sizes) {
    if (s.bound && s.bound->total > 0.0 && std::isfinite(s.bound->total)) {
      yhi = std::max(yhi, std::min(std::log10(s.bound->total) + 0.1, ylo + 6.0));
    }
  }
  double xlo = std::log10(xs.front()), xhi = std::log10(xs.back());
  if (xhi - xlo < 1e-9) {
    xlo -= 0.5;
    xhi += 0.5;
  } else {
    const double pad = 0.05 * (xhi - xlo);
    xlo -= pad;
    xhi += pad;
  }
  const auto px = [&](double n) { return left + (std::log10(n) - xlo) / (xhi - xlo) * (W - left - right); };
  const auto py = [&](double v) {
    const double lv = std::clamp(std::log10(v), ylo, yhi);
    return top + (yhi - lv) / (yhi - ylo) * (H - top - bottom);
  };

  os << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << W - left - right << "\" height=\""
     << H - top - bottom << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int d = static_cast<int>(std::ceil(ylo)); d <= static_cast<int>(std::floor(yhi)); ++d) {
    const double y = py(std::pow(10.0, d));
    os << "<text x=\"" << left - 6 << "\" y=\"" << y + 4 << "\" font-size=\"11\" text-anchor=\"end\">1e" << d
       << "</text>\n";
  }
  for (double n : xs) {
    os << "<text x=\"" << px(n) << "\" y=\"" << H - bottom + 16 << "\" font-size=\"11\" text-anchor=\"middle\">"
       << static_cast<long long>(n) << "</text>\n";
  }
  os << "<text x=\"" << (left + W - right) / 2 << "\" y=\"" << H - 10 << "\" text-anchor=\"middle\">n</text>\n";
  os << "<text x=\"16\" y=\"" << (top + H - bottom) / 2 << "\" transform=\"rotate(-90 16 " << (top + H - bottom) / 2
     << ")\" text-anchor=\"middle\">mean squared error</text>\n";

  auto series = [&](auto pick, const char* color, const char* label, int slot) {
    std::ostringstream pts;
    for (const SizeResult& s : report.sizes) {
      const double v = pick(s);
      if (!(v > 0.0) || !std::isfinite(v)) continue;
      pts << px(static_cast<double>(s.n)) << "," << py(v) << " ";
      os << "<circle cx=\"" << px(static_cast<double>(s.n)) << "\" cy=\"" << py(v) << "\" r=\"3\" fill=\"" << color
         << "\"/>\n";
    }
    os << "<polyline points=\"" << pts.str() << "\" fill=\"none\" stroke=\"" << color << "\"/>\n";
    os << "<text x=\"" << W - right - 8 << "\" y=\"" << top + 16 + 16 * slot << "\" font-size=\"12\" fill=\"" << color
       << "\" text-anchor=\"end\">" << label << "</text>\n";
  };
  series([](const SizeResult& s) { return s.mse_last.mean; }, "#1f77b4", "last iterate", 0);
  series([](const SizeResult& s) { return s.mse_average.mean; }, "#d62728", "averaged iterate", 1);
  if (std::any_of(report.sizes.begin(), report.sizes.end(), [](const SizeResult& s) { return s.bound.has_value(); })) {
    series([](const SizeResult& s) { return s.bound ? s.bound->total : 0.0; }, "#7f7f7f",
           "online bound (clipped to axis)", 2);
  }
  os << "</svg>\n";
  return os.str();
}

std::vector<std::string> emit_report(const ExperimentReport& report, const OutputSpec& outputs) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(outputs.out_dir, ec);
  if (ec) throw Error("cannot create output directory '" + outputs.out_dir + "': " + ec.message());

  std::vector<std::string> written;
  auto write = [&](const std::string& ext, const std::string& content) {
    const std::string path = (fs::path(outputs.out_dir) / (outputs.stem + ext)).string();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open '" + path + "' for writing");
    out << content;
    out.close();
    if (!out) throw Error("failed writing '" + path + "'");
    written.push_back(path);
  };
  if (outputs.csv) write(".csv", format_csv(report_rows(report)));
  if (outputs.json) write(".json", summary_json(report).dump(2) + "\n");
  if (outputs.svg) write(".svg", render_svg(report));
  return written;
}

}  // namespace cdlab
