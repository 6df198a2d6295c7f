#ifndef NUCLEUS_STATS_HPP
#define NUCLEUS_STATS_HPP

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace nucleus::stats {

double mean(const std::vector<double>& xs);
// Sample (n-1) and population (n) standard deviation. Summary rows use the
// sample form; both are exposed.
double sample_sd(const std::vector<double>& xs);
double population_sd(const std::vector<double>& xs);

// Regularized incomplete beta I_x(a, b), continued-fraction evaluation.
double incomplete_beta(double a, double b, double x);
// Two-sided tail probability of Student's t with df degrees of freedom.
double student_t_two_sided_p(double t, double df);

struct TTestResult {
  double t = 0.0;
  double p = 1.0;
  double df = 0.0;
  // Degenerate inputs (zero variance): p is 1 when the means agree and 0
  // otherwise, and t/df carry no information.
  bool zero_variance = false;
};

// Paired t-test on equal-length samples (|xs| = |ys| >= 2).
TTestResult paired_ttest(const std::vector<double>& xs,
                         const std::vector<double>& ys);
// Unpaired t-test in Welch's unequal-variance form (each sample >= 2).
TTestResult unpaired_ttest(const std::vector<double>& xs,
                           const std::vector<double>& ys);

// "**" below .01, "*" below .05, empty otherwise.
std::string significance_stars(double p);

// ---- result tables ----

struct CellKey {
  std::string task;
  std::string layer;
  std::string target_kind;
  std::string setting;  // e.g. parser mode or representation

  std::string label() const;
  auto operator<=>(const CellKey&) const = default;
};

struct Cell {
  double majority = 0.0;
  double accuracy = 0.0;
  double delta() const { return accuracy - majority; }
};

struct ResultsMatrix {
  std::vector<std::string> languages;  // row order
  std::vector<CellKey> columns;        // column order
  // language -> column -> cell; absent entries are missing cells
  std::map<std::string, std::map<CellKey, Cell>> cells;

  const Cell* find(const std::string& lang, const CellKey& key) const;
  bool has_missing() const;
  // Column deltas in row order; absent when any row lacks the cell.
  std::optional<std::vector<double>> column_deltas(const CellKey& key) const;
};

// Rows in first-seen language order, columns in first-seen key order.
ResultsMatrix build_results(
    const std::vector<
        std::pair<std::string, std::vector<std::pair<CellKey, Cell>>>>&
        per_language);

enum class RenderFormat { tsv, md };

// Per-language delta rows plus av/sd summary rows (sd omitted for a single
// language). The av entry carries stars from a paired test of accuracy
// against majority across languages. Missing cells render as "-".
std::string render(const ResultsMatrix& m, RenderFormat fmt);

}  // namespace nucleus::stats

#endif
