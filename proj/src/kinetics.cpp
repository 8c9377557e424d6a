#include "uvcplan/kinetics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "uvcplan/csv.hpp"
#include "uvcplan/error.hpp"

namespace uvcplan {

void PassSeries::validate() const {
  if (observations.empty()) throw ValidationError("observations", "series '" + label + "' is empty");
  std::set<int> passes;
  for (const auto& o : observations) {
    if (o.pass < 0) throw ValidationError("pass_n", "must be >= 0");
    if (!(std::isfinite(o.count) && o.count >= 0.0)) throw ValidationError("count_cfu", "must be finite and >= 0");
    passes.insert(o.pass);
  }
  if (!passes.count(0)) throw ValidationError("pass_n", "series '" + label + "' has no pass 0");
  if (passes.size() < 2) throw ValidationError("pass_n", "series '" + label + "' needs two distinct pass numbers");
}

double predict(double n0, double lambda, double n) { return n0 * std::pow(10.0, -lambda * n); }

KineticsFit fit(const PassSeries& series, double detection_limit) {
  series.validate();
  if (!(std::isfinite(detection_limit) && detection_limit > 0.0))
    throw ValidationError("detection_limit", "must be > 0");
  if (std::all_of(series.observations.begin(), series.observations.end(), [](const auto& o) { return o.count == 0.0; }))
    throw ValidationError("count_cfu", "all counts are zero");

  KineticsFit out;
  const auto n = static_cast<double>(series.observations.size());
  double sx = 0.0;
  double sy = 0.0;
  std::vector<double> ys;
  for (const auto& o : series.observations) {
    double c = o.count;
    if (c == 0.0) {
      c = detection_limit;
      ++out.censored_count;
    }
    ys.push_back(std::log10(c));
    sx += o.pass;
    sy += ys.back();
  }
  const double mx = sx / n;
  const double my = sy / n;
  double sxx = 0.0;
  double sxy = 0.0;
  for (std::size_t k = 0; k < ys.size(); ++k) {
    const double dx = series.observations[k].pass - mx;
    sxx += dx * dx;
    sxy += dx * (ys[k] - my);
  }
  const double slope = sxy / sxx;
  const double intercept = my - slope * mx;
  out.lambda = -slope;
  out.n0_fit = std::pow(10.0, intercept);
  double ss = 0.0;
  for (std::size_t k = 0; k < ys.size(); ++k) {
    const double r = ys[k] - (intercept + slope * series.observations[k].pass);
    ss += r * r;
  }
  out.residual = std::sqrt(ss / n);
  return out;
}

double tbc_decrease(double before, double after) {
  if (!(std::isfinite(before) && before > 0.0)) throw ValidationError("before", "must be > 0");
  if (!(std::isfinite(after) && after >= 0.0)) throw ValidationError("after", "must be >= 0");
  return (before - after) / before * 100.0;
}

double aggregate_decrease(const std::vector<std::pair<double, double>>& pairs) {
  if (pairs.empty()) throw ValidationError("pairs", "empty list");
  double before = 0.0;
  double after = 0.0;
  for (auto [b, a] : pairs) {
    if (!(std::isfinite(b) && b > 0.0)) throw ValidationError("before", "must be > 0");
    if (!(std::isfinite(a) && a >= 0.0)) throw ValidationError("after", "must be >= 0");
    before += 1.0;
    after += a / b;
  }
  return tbc_decrease(before, after);
}

std::optional<double> decrease_to_lambda(double decrease_percent) {
  if (!(std::isfinite(decrease_percent) && decrease_percent >= 0.0 && decrease_percent <= 100.0))
    throw ValidationError("decrease", "must lie in [0, 100]");
  if (decrease_percent == 100.0) return std::nullopt;
  return -std::log10(1.0 - decrease_percent / 100.0);
}

std::vector<PassSeries> parse_samples(std::string_view text, const std::string& source) {
  const CsvTable t = parse_csv(text, source);
  const auto lc = t.require_column("label");
  const auto dc = t.require_column("distance_m");
  const auto hc = t.require_column("height_m");
  const auto pc = t.require_column("pass_n");
  const auto cc = t.require_column("count_cfu");
  if (t.rows.empty()) throw ValidationError("samples", source + ": no sample rows");
  std::vector<PassSeries> out;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const std::string& label = t.rows[r][lc];
    auto it = std::find_if(out.begin(), out.end(), [&](const PassSeries& s) { return s.label == label; });
    const double d = t.number(r, dc);
    const double h = t.number(r, hc);
    if (it == out.end()) {
      out.push_back(PassSeries{label, d, h, {}});
      it = out.end() - 1;
    } else if (it->distance_m != d || it->height_m != h) {
      throw ParseError(source, t.lines[r], "series '" + label + "': distance/height changed between rows");
    }
    const long pass = t.integer(r, pc);
    const double count = t.number(r, cc);
    if (pass < 0) throw ParseError(source, t.lines[r], "pass_n must be >= 0");
    if (!(count >= 0.0)) throw ParseError(source, t.lines[r], "count_cfu must be >= 0");
    it->observations.push_back({static_cast<int>(pass), count});
  }
  return out;
}

std::vector<PassSeries> load_samples(const std::filesystem::path& path) {
  return parse_samples(read_text_file(path), path.string());
}

std::vector<DecreaseRow> decrease_by_distance(const std::vector<PassSeries>& series) {
  std::map<double, DecreaseRow> groups;
  for (const auto& s : series) {
    std::optional<double> before;
    std::optional<double> after;
    for (const auto& o : s.observations) {
      if (o.pass == 0) before = o.count;
      if (o.pass == 1) after = o.count;
    }
    if (!before || !after) continue;
    auto& g = groups[s.distance_m];
    g.distance_m = s.distance_m;
    g.pairs.emplace_back(*before, *after);
  }
  std::vector<DecreaseRow> out;
  for (auto& [d, g] : groups) {
    g.decrease = aggregate_decrease(g.pairs);
    out.push_back(std::move(g));
  }
  return out;
}

}  // namespace uvcplan
