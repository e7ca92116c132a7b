#include "sgldreg/experiments.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>

#include <boost/math/distributions/students_t.hpp>

#include "io_util.hpp"
#include "sgldreg/metrics.hpp"

namespace sgldreg {

TTestResult paired_ttest(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("paired_ttest: series lengths differ");
  if (x.size() < 2) throw std::invalid_argument("paired_ttest: needs at least two pairs");
  const double n = static_cast<double>(x.size());
  double mean = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) mean += x[i] - y[i];
  mean /= n;
  double ss = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - y[i] - mean;
    ss += d * d;
  }
  TTestResult r;
  r.degrees_of_freedom = x.size() - 1;
  const double sd = std::sqrt(ss / (n - 1.0));
  if (sd == 0.0) {
    r.t = mean == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), mean);
    r.p_value = mean == 0.0 ? 1.0 : 0.0;
    return r;
  }
  r.t = mean / (sd / std::sqrt(n));
  const boost::math::students_t dist(static_cast<double>(r.degrees_of_freedom));
  r.p_value = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(r.t)));
  return r;
}

std::vector<EvaluationRow> evaluate_pair(const LoadedPair& pair, const SnapshotStore& store) {
  const RegistrationResult reg = register_images(pair.images.moving, pair.images.fixed, store);
  const double folds = fold_percentage(reg.deformation);
  std::vector<EvaluationRow> rows;
  for (std::size_t k = 0; k < pair.moving_masks.size(); ++k) {
    EvaluationRow row;
    row.pair_id = pair.id;
    row.label_id = k + 1;
    row.dice_before = dice(pair.moving_masks[k], pair.fixed_masks[k]);
    row.dice_after = dice(warp_mask(pair.moving_masks[k], reg.deformation), pair.fixed_masks[k]);
    row.fold_pct = folds;
    rows.push_back(std::move(row));
  }
  if (rows.empty()) {
    // Unlabelled pair: keep its fold percentage.
    rows.push_back({pair.id, 0, std::numeric_limits<double>::quiet_NaN(),
                    std::numeric_limits<double>::quiet_NaN(), folds});
  }
  return rows;
}

std::vector<PairScore> pair_scores(std::span<const EvaluationRow> rows) {
  std::vector<PairScore> out;
  std::vector<std::size_t> counts;
  for (const auto& r : rows) {
    if (out.empty() || out.back().pair_id != r.pair_id) {
      out.push_back({r.pair_id, 0.0, 0.0, r.fold_pct});
      counts.push_back(0);
    }
    out.back().dice_before += r.dice_before;
    out.back().dice_after += r.dice_after;
    ++counts.back();
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i].dice_before /= static_cast<double>(counts[i]);
    out[i].dice_after /= static_cast<double>(counts[i]);
  }
  return out;
}

namespace {

std::string fmt(double v) {
  if (std::isnan(v)) return "";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.8g", v);
  return buf;
}

std::array<double, 2> mean_std(const std::vector<double>& v) {
  if (v.empty()) return {std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN()};
  double m = 0.0;
  for (double x : v) m += x;
  m /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  const double sd = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
  return {m, sd};
}

}  // namespace

void write_evaluation_csv(std::ostream& out, std::span<const EvaluationRow> rows,
                          const std::vector<double>* baseline) {
  out << "pair_id,label_id,dice_before,dice_after,fold_pct";
  if (baseline) out << ",p_value";
  out << '\n';
  std::vector<double> before, after, folds;
  for (const auto& r : rows) {
    out << r.pair_id << ',' << r.label_id << ',' << fmt(r.dice_before) << ',' << fmt(r.dice_after) << ','
        << fmt(r.fold_pct);
    if (baseline) out << ',';
    out << '\n';
    if (!std::isnan(r.dice_before)) {
      before.push_back(r.dice_before);
      after.push_back(r.dice_after);
    }
    folds.push_back(r.fold_pct);
  }
  double p = std::numeric_limits<double>::quiet_NaN();
  if (baseline) {
    std::vector<double> ours;
    for (const auto& s : pair_scores(rows)) ours.push_back(s.dice_after);
    if (ours.size() != baseline->size()) {
      throw std::invalid_argument("baseline lists " + std::to_string(baseline->size()) + " pairs, evaluation has " +
                                  std::to_string(ours.size()));
    }
    p = paired_ttest(ours, *baseline).p_value;
  }
  const auto b = mean_std(before), a = mean_std(after), f = mean_std(folds);
  for (int k = 0; k < 2; ++k) {
    out << (k == 0 ? "mean" : "std") << ",," << fmt(b[k]) << ',' << fmt(a[k]) << ',' << fmt(f[k]);
    if (baseline) out << ',' << fmt(p);
    out << '\n';
  }
}

std::vector<double> read_baseline_dice(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("baseline CSV is empty");
  std::vector<std::string> header;
  {
    std::stringstream ss(detail::trim(line));
    std::string cell;
    while (std::getline(ss, cell, ',')) header.push_back(cell);
  }
  std::size_t id_col = header.size(), dice_col = header.size();
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == "pair_id") id_col = i;
    if (header[i] == "dice_after") dice_col = i;
  }
  if (id_col == header.size() || dice_col == header.size()) {
    throw std::invalid_argument("baseline CSV needs pair_id and dice_after columns");
  }
  std::vector<EvaluationRow> rows;
  while (std::getline(in, line)) {
    line = detail::trim(line);
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() <= std::max(id_col, dice_col)) throw std::invalid_argument("short baseline CSV row: " + line);
    if (cells[id_col] == "mean" || cells[id_col] == "std") continue;
    EvaluationRow r;
    r.pair_id = cells[id_col];
    try {
      r.dice_after = std::stod(cells[dice_col]);
    } catch (const std::exception&) {
      throw std::invalid_argument("bad dice_after in baseline CSV row: " + line);
    }
    rows.push_back(std::move(r));
  }
  std::vector<double> out;
  for (const auto& s : pair_scores(rows)) out.push_back(s.dice_after);
  return out;
}

NoiseExperimentResult uncertainty_noise_experiment(const SnapshotStore& store, std::span<const ImagePair> pairs,
                                                   std::span<const double> sigmas, std::uint64_t seed,
                                                   const UncertaintyOptions& options) {
  if (sigmas.size() < 2) throw std::invalid_argument("uncertainty experiment needs at least two noise levels");
  if (pairs.empty()) throw std::invalid_argument("uncertainty experiment needs at least one pair");
  const std::vector<double> weights = store.posterior_weights();
  NoiseExperimentResult res;
  res.sigmas.assign(sigmas.begin(), sigmas.end());
  for (std::size_t s = 0; s < sigmas.size(); ++s) {
    std::vector<double> per_pair;
    double total = 0.0;
    for (std::size_t p = 0; p < pairs.size(); ++p) {
      std::seed_seq seq{seed, std::uint64_t{s}, std::uint64_t{p}};
      std::array<std::uint64_t, 2> streams{};
      seq.generate(streams.begin(), streams.end());
      const Volume moving = corrupt_gaussian(pairs[p].moving, sigmas[s], streams[0]);
      const Volume fixed = corrupt_gaussian(pairs[p].fixed, sigmas[s], streams[1]);
      const auto fields = sample_velocities(moving, fixed, store);
      const VectorField h = uncertainty(variance(fields, weights), options);
      double m = 0.0;
      for (double v : h.tensor().values()) m += v;
      m /= static_cast<double>(h.tensor().size());
      per_pair.push_back(m);
      total += m;
    }
    res.mean_uncertainty.push_back(total / static_cast<double>(pairs.size()));
    res.per_pair.push_back(std::move(per_pair));
  }
  const auto [lo, hi] = std::minmax_element(res.mean_uncertainty.begin(), res.mean_uncertainty.end());
  if (*hi - *lo <= 1e-9 * std::max(1.0, std::abs(*hi))) {
    res.degenerate = true;
    res.r = std::numeric_limits<double>::quiet_NaN();
  } else {
    res.r = pearson(res.sigmas, res.mean_uncertainty);
  }
  return res;
}

}  // namespace sgldreg
