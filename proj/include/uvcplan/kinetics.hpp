#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace uvcplan {

struct PassObservation {
  int pass{0};
  double count{0.0};  ///< CFU per 25 cm²
};

struct PassSeries {
  std::string label;
  double distance_m{0.0};
  double height_m{0.0};
  std::vector<PassObservation> observations;

  void validate() const;
};

struct KineticsFit {
  double lambda{0.0};     ///< log10 reduction per pass
  double n0_fit{0.0};
  double residual{0.0};   ///< RMS of log10 residuals
  int censored_count{0};  ///< zero counts replaced by the detection limit
};

/// N(n) = n0 * 10^(-lambda * n).
double predict(double n0, double lambda, double n);

/// Least squares on log10(count) against pass number; zeros become
/// `detection_limit` first.
KineticsFit fit(const PassSeries& series, double detection_limit = 0.5);

/// (before - after) / before * 100.
double tbc_decrease(double before, double after);

/// Normalizes each pair by its own `before`, sums the normalized values and
/// applies tbc_decrease to the sums.
double aggregate_decrease(const std::vector<std::pair<double, double>>& pairs);

/// Per-pass rate equivalent to a single-pass decrease. nullopt marks a
/// complete kill (decrease = 100), where the rate is unbounded.
std::optional<double> decrease_to_lambda(double decrease_percent);

// Sample CSV: label,distance_m,height_m,pass_n,count_cfu. Rows sharing a
// label form one series, in order of first appearance.
std::vector<PassSeries> parse_samples(std::string_view text, const std::string& source = "<samples>");
std::vector<PassSeries> load_samples(const std::filesystem::path& path);

/// One group of the before/after aggregation: all series at one distance.
struct DecreaseRow {
  double distance_m{0.0};
  std::vector<std::pair<double, double>> pairs;  ///< (pass 0, pass 1) per series
  double decrease{0.0};
};

/// Groups series by distance (ascending) and aggregates the pass-0/pass-1
/// counts of each group. Series lacking pass 0 or pass 1 are skipped.
std::vector<DecreaseRow> decrease_by_distance(const std::vector<PassSeries>& series);

}  // namespace uvcplan
