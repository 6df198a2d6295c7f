#include "nucleus/stats.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

#include "nucleus/numeric.hpp"

namespace nucleus::stats {

using numeric::UsageError;

double mean(const std::vector<double>& xs) {
  if (xs.empty()) throw UsageError("mean of an empty sample");
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

static double sum_sq_dev(const std::vector<double>& xs) {
  const double m = mean(xs);
  double s = 0.0;
  for (double x : xs) s += (x - m) * (x - m);
  return s;
}

double sample_sd(const std::vector<double>& xs) {
  if (xs.size() < 2) throw UsageError("sample sd needs at least 2 values");
  return std::sqrt(sum_sq_dev(xs) / static_cast<double>(xs.size() - 1));
}

double population_sd(const std::vector<double>& xs) {
  if (xs.empty()) throw UsageError("population sd of an empty sample");
  return std::sqrt(sum_sq_dev(xs) / static_cast<double>(xs.size()));
}

// Continued fraction for the regularized incomplete beta (Lentz's method).
static double beta_cf(double a, double b, double x) {
  constexpr int kMaxIter = 300;
  constexpr double kEps = 1e-15;
  constexpr double kTiny = 1e-300;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) break;
  }
  return h;
}

double incomplete_beta(double a, double b, double x) {
  if (a <= 0.0 || b <= 0.0)
    throw UsageError("incomplete_beta requires positive shape parameters");
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double ln_front = std::lgamma(a + b) - std::lgamma(a) -
                          std::lgamma(b) + a * std::log(x) +
                          b * std::log1p(-x);
  // use whichever tail converges fast
  if (x < (a + 1.0) / (a + b + 2.0))
    return std::exp(ln_front) * beta_cf(a, b, x) / a;
  return 1.0 - std::exp(ln_front) * beta_cf(b, a, 1.0 - x) / b;
}

double student_t_two_sided_p(double t, double df) {
  if (df <= 0.0) throw UsageError("t distribution needs positive df");
  if (!std::isfinite(t)) return 0.0;
  return incomplete_beta(df / 2.0, 0.5, df / (df + t * t));
}

TTestResult paired_ttest(const std::vector<double>& xs,
                         const std::vector<double>& ys) {
  if (xs.size() != ys.size())
    throw UsageError("paired t-test needs equal-length samples");
  if (xs.size() < 2) throw UsageError("paired t-test needs n >= 2");
  std::vector<double> d(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) d[i] = xs[i] - ys[i];
  const double n = static_cast<double>(d.size());
  const double md = mean(d);
  const double sd = sample_sd(d);
  TTestResult r;
  r.df = n - 1.0;
  if (sd == 0.0) {
    r.zero_variance = true;
    r.p = md == 0.0 ? 1.0 : 0.0;
    return r;
  }
  r.t = md / (sd / std::sqrt(n));
  r.p = student_t_two_sided_p(r.t, r.df);
  return r;
}

TTestResult unpaired_ttest(const std::vector<double>& xs,
                           const std::vector<double>& ys) {
  if (xs.size() < 2 || ys.size() < 2)
    throw UsageError("unpaired t-test needs n >= 2 in each sample");
  const double nx = static_cast<double>(xs.size());
  const double ny = static_cast<double>(ys.size());
  const double vx = sample_sd(xs) * sample_sd(xs);
  const double vy = sample_sd(ys) * sample_sd(ys);
  TTestResult r;
  if (vx == 0.0 && vy == 0.0) {
    r.zero_variance = true;
    r.df = nx + ny - 2.0;
    r.p = mean(xs) == mean(ys) ? 1.0 : 0.0;
    return r;
  }
  const double se2 = vx / nx + vy / ny;
  r.t = (mean(xs) - mean(ys)) / std::sqrt(se2);
  // Welch–Satterthwaite degrees of freedom
  r.df = se2 * se2 /
         (vx * vx / (nx * nx * (nx - 1.0)) + vy * vy / (ny * ny * (ny - 1.0)));
  r.p = student_t_two_sided_p(r.t, r.df);
  return r;
}

std::string significance_stars(double p) {
  if (p < 0.01) return "**";
  if (p < 0.05) return "*";
  return "";
}

std::string CellKey::label() const {
  std::string s = task + "/" + layer + "/" + target_kind;
  if (!setting.empty()) s += "/" + setting;
  return s;
}

const Cell* ResultsMatrix::find(const std::string& lang,
                                const CellKey& key) const {
  auto row = cells.find(lang);
  if (row == cells.end()) return nullptr;
  auto it = row->second.find(key);
  return it == row->second.end() ? nullptr : &it->second;
}

bool ResultsMatrix::has_missing() const {
  for (const std::string& lang : languages)
    for (const CellKey& key : columns)
      if (!find(lang, key)) return true;
  return false;
}

std::optional<std::vector<double>> ResultsMatrix::column_deltas(
    const CellKey& key) const {
  std::vector<double> out;
  for (const std::string& lang : languages) {
    const Cell* c = find(lang, key);
    if (!c) return std::nullopt;
    out.push_back(c->delta());
  }
  return out;
}

ResultsMatrix build_results(
    const std::vector<
        std::pair<std::string, std::vector<std::pair<CellKey, Cell>>>>&
        per_language) {
  ResultsMatrix m;
  for (const auto& [lang, report] : per_language) {
    if (m.cells.count(lang)) throw UsageError("duplicate language row: " + lang);
    m.languages.push_back(lang);
    auto& row = m.cells[lang];
    for (const auto& [key, cell] : report) {
      if (std::find(m.columns.begin(), m.columns.end(), key) ==
          m.columns.end())
        m.columns.push_back(key);
      row[key] = cell;
    }
  }
  return m;
}

static std::string fmt1(double x) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(1) << x;
  return out.str();
}

std::string render(const ResultsMatrix& m, RenderFormat fmt) {
  const bool md = fmt == RenderFormat::md;
  const char* sep = md ? " | " : "\t";
  std::ostringstream out;

  out << (md ? "| " : "") << "lang";
  for (const CellKey& key : m.columns) out << sep << key.label();
  out << (md ? " |" : "") << "\n";
  if (md) {
    out << "|---";
    for (std::size_t i = 0; i < m.columns.size(); ++i) out << "|---";
    out << "|\n";
  }

  for (const std::string& lang : m.languages) {
    out << (md ? "| " : "") << lang;
    for (const CellKey& key : m.columns) {
      const Cell* c = m.find(lang, key);
      out << sep << (c ? fmt1(c->delta()) : "-");
    }
    out << (md ? " |" : "") << "\n";
  }

  // summary rows over complete columns; stars from a paired test of accuracy
  // against majority across languages
  out << (md ? "| " : "") << "av";
  for (const CellKey& key : m.columns) {
    auto deltas = m.column_deltas(key);
    if (!deltas) {
      out << sep << "-";
      continue;
    }
    std::string stars;
    if (deltas->size() >= 2) {
      std::vector<double> acc, maj;
      for (const std::string& lang : m.languages) {
        const Cell* c = m.find(lang, key);
        acc.push_back(c->accuracy);
        maj.push_back(c->majority);
      }
      stars = significance_stars(paired_ttest(acc, maj).p);
    }
    out << sep << fmt1(mean(*deltas)) << stars;
  }
  out << (md ? " |" : "") << "\n";

  if (m.languages.size() >= 2) {
    out << (md ? "| " : "") << "sd";
    for (const CellKey& key : m.columns) {
      auto deltas = m.column_deltas(key);
      out << sep << (deltas ? fmt1(sample_sd(*deltas)) : "-");
    }
    out << (md ? " |" : "") << "\n";
  }
  return out.str();
}

}  // namespace nucleus::stats
