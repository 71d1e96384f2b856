#pragma once

// ROC-AUC over residual scores and the window-size x label experiment grid.
// AUC is computed two ways, Mann-Whitney pair counting and a trapezoidal
// threshold sweep, and the two must agree; ties count as one half.

#include <iomanip>
#include <map>

#include "driveprof/pipeline.hpp"

namespace driveprof {

struct RocResult {
  double auc = 0.0;
  std::vector<std::pair<double, double>> curve;  // (fpr, tpr), (0,0) .. (1,1)
  size_t n_pos = 0;
  size_t n_neg = 0;
};

// Core ROC math on raw error values (positives = aggressive class).
inline RocResult roc_from_errors(std::vector<double> pos, std::vector<double> neg) {
  if (pos.empty() || neg.empty())
    throw ValidationError("degenerate ROC: positive or negative class is empty");
  std::sort(pos.begin(), pos.end());
  std::sort(neg.begin(), neg.end());
  const size_t n_pos = pos.size(), n_neg = neg.size();

  // Mann-Whitney: count positive>negative pairs, ties worth 0.5.
  double weighted_pairs = 0.0;  // 2*greater + ties, kept integral
  for (double p : pos) {
    const auto lo = std::lower_bound(neg.begin(), neg.end(), p);
    const auto hi = std::upper_bound(neg.begin(), neg.end(), p);
    const auto greater = static_cast<double>(lo - neg.begin());
    const auto ties = static_cast<double>(hi - lo);
    weighted_pairs += 2.0 * greater + ties;
  }
  const double denom = 2.0 * static_cast<double>(n_pos) * static_cast<double>(n_neg);
  const double auc_mw = weighted_pairs / denom;

  // Threshold sweep at every distinct error value plus the +/-inf endpoints;
  // a score is called aggressive iff error > threshold (strict).
  std::vector<double> thresholds;
  thresholds.reserve(n_pos + n_neg);
  thresholds.insert(thresholds.end(), pos.begin(), pos.end());
  thresholds.insert(thresholds.end(), neg.begin(), neg.end());
  std::sort(thresholds.begin(), thresholds.end(), std::greater<>());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());

  RocResult result;
  result.n_pos = n_pos;
  result.n_neg = n_neg;
  result.curve.emplace_back(0.0, 0.0);  // threshold = +inf
  double area2 = 0.0;                   // twice the area, in pair counts
  size_t prev_tp = 0, prev_fp = 0;
  for (double tau : thresholds) {
    // counts strictly above tau; inputs are sorted ascending
    const size_t tp = n_pos - static_cast<size_t>(std::upper_bound(pos.begin(), pos.end(), tau) -
                                                  pos.begin());
    const size_t fp = n_neg - static_cast<size_t>(std::upper_bound(neg.begin(), neg.end(), tau) -
                                                  neg.begin());
    area2 += static_cast<double>(fp - prev_fp) * static_cast<double>(tp + prev_tp);
    result.curve.emplace_back(static_cast<double>(fp) / static_cast<double>(n_neg),
                              static_cast<double>(tp) / static_cast<double>(n_pos));
    prev_tp = tp;
    prev_fp = fp;
  }
  area2 += static_cast<double>(n_neg - prev_fp) * static_cast<double>(n_pos + prev_tp);
  result.curve.emplace_back(1.0, 1.0);  // threshold = -inf
  const double auc_sweep = area2 / denom;

  if (std::abs(auc_mw - auc_sweep) > 1e-12)
    throw std::logic_error("ROC routes disagree: " + std::to_string(auc_mw) + " vs " +
                           std::to_string(auc_sweep));
  result.auc = auc_mw;
  return result;
}

// Binary evaluation of one aggressive class against Normal; records of the
// other five classes are excluded.
inline RocResult roc_auc(const std::vector<ScoreRecord>& records, Behavior positive_label) {
  if (positive_label == Behavior::Normal)
    throw ConfigError("positive label must be an aggressive class");
  std::vector<double> pos, neg;
  for (const auto& r : records) {
    if (r.label == positive_label)
      pos.push_back(r.error);
    else if (r.label == Behavior::Normal)
      neg.push_back(r.error);
  }
  return roc_from_errors(std::move(pos), std::move(neg));
}

inline RocResult evaluate_label(const LstmModel& model, const std::vector<WindowView>& normal_pairs,
                                const std::vector<WindowView>& aggressive_pairs, int window_size,
                                Behavior positive_label) {
  if (normal_pairs.empty() || aggressive_pairs.empty())
    throw ValidationError("evaluate_label needs both classes non-empty");
  std::vector<ScoreRecord> records = score_dataset(model, normal_pairs, window_size);
  std::vector<ScoreRecord> aggr = score_dataset(model, aggressive_pairs, window_size);
  records.insert(records.end(), aggr.begin(), aggr.end());
  return roc_auc(records, positive_label);
}

// Row order of the experiment grid (and its reports).
inline constexpr std::array<Behavior, 6> kGridLabelOrder = {
    Behavior::AggrRightTurn,      Behavior::AggrLeftTurn, Behavior::AggrLaneChangeRight,
    Behavior::AggrLaneChangeLeft, Behavior::AggrBrake,    Behavior::AggrAcceleration,
};

struct GridCell {
  bool present = false;
  double auc = std::numeric_limits<double>::quiet_NaN();
  RocResult roc;  // curve retained for export; empty when absent
};

struct GridResult {
  std::vector<int> window_sizes;   // column order
  std::vector<Behavior> labels;    // row order
  std::vector<std::vector<GridCell>> cells;  // cells[w][l]
  std::vector<double> mean_by_window;
  std::vector<double> mean_by_label;
  double grand_mean = std::numeric_limits<double>::quiet_NaN();
  std::vector<std::string> warnings;
};

// Marginal means over present cells; the grand mean averages the cells
// themselves, not the marginals.
inline void compute_means(GridResult& grid) {
  const size_t n_w = grid.window_sizes.size(), n_l = grid.labels.size();
  grid.mean_by_window.assign(n_w, std::numeric_limits<double>::quiet_NaN());
  grid.mean_by_label.assign(n_l, std::numeric_limits<double>::quiet_NaN());
  double total = 0.0;
  size_t count = 0;
  for (size_t w = 0; w < n_w; ++w) {
    double sum = 0.0;
    size_t k = 0;
    for (size_t l = 0; l < n_l; ++l)
      if (grid.cells[w][l].present) {
        sum += grid.cells[w][l].auc;
        ++k;
      }
    if (k > 0) grid.mean_by_window[w] = sum / static_cast<double>(k);
    total += sum;
    count += k;
  }
  for (size_t l = 0; l < n_l; ++l) {
    double sum = 0.0;
    size_t k = 0;
    for (size_t w = 0; w < n_w; ++w)
      if (grid.cells[w][l].present) {
        sum += grid.cells[w][l].auc;
        ++k;
      }
    if (k > 0) grid.mean_by_label[l] = sum / static_cast<double>(k);
  }
  if (count > 0) grid.grand_mean = total / static_cast<double>(count);
}

struct SessionFrames {
  std::string name;
  FrameSeries series;  // preprocessed, unscaled
};

struct GridConfig {
  TrainConfig train_template;
  std::vector<int> window_sizes = {200, 100, 50, 25};
  uint64_t base_seed = 1;
};

struct GridOutcome {
  GridResult grid;
  ScalerParams scaler;
  std::vector<TrainResult> trained;  // one per window size, same order
};

// One model per window size, trained on normal-only windows from the
// leading train_fraction of every session, evaluated on the holdout tail.
// The scaler is fitted once, on Normal frames of the training blocks.
inline GridOutcome run_grid(const std::vector<SessionFrames>& dataset, const GridConfig& config) {
  if (dataset.empty()) throw ValidationError("empty dataset");
  const double fraction = config.train_template.train_fraction;

  std::vector<const FrameSeries*> series_ptrs;
  std::vector<Eigen::Index> fit_ends;
  for (const auto& s : dataset) {
    series_ptrs.push_back(&s.series);
    fit_ends.push_back(static_cast<Eigen::Index>(
        static_cast<double>(s.series.frame_count()) * fraction));
  }

  GridOutcome outcome;
  outcome.scaler = fit_scaler(series_ptrs, fit_ends);
  std::vector<FrameSeries> scaled;
  scaled.reserve(dataset.size());
  for (const auto& s : dataset) scaled.push_back(apply_scaler(s.series, outcome.scaler));

  GridResult& grid = outcome.grid;
  grid.window_sizes = config.window_sizes;
  grid.labels.assign(kGridLabelOrder.begin(), kGridLabelOrder.end());
  grid.cells.assign(grid.window_sizes.size(), std::vector<GridCell>(grid.labels.size()));

  for (size_t wi = 0; wi < grid.window_sizes.size(); ++wi) {
    const int window = grid.window_sizes[wi];
    TrainConfig tc = config.train_template;
    tc.window_size = window;
    tc.seed = derive_seed(config.base_seed, static_cast<uint64_t>(window));

    std::vector<WindowView> train_views, holdout_views;
    for (const auto& series : scaled) {
      if (series.frame_count() <= window) continue;  // session too short for this W
      WindowSet set = slide_windows(series, window, tc.strict_labels);
      auto [train_set, holdout_set] = temporal_split(set, fraction, series.frame_count());
      for (const auto& p : train_set.pairs)
        if (p.label == Behavior::Normal) train_views.push_back(WindowView{&series, p.origin, p.label});
      for (const auto& p : holdout_set.pairs)
        holdout_views.push_back(WindowView{&series, p.origin, p.label});
    }
    if (train_views.empty())
      throw ValidationError("no normal training windows for window size " + std::to_string(window));

    TrainResult trained = train(tc, train_views);
    std::vector<ScoreRecord> records = score_dataset(trained.model, holdout_views, window);

    for (size_t li = 0; li < grid.labels.size(); ++li) {
      const Behavior label = grid.labels[li];
      const bool has_pos = std::any_of(records.begin(), records.end(),
                                       [&](const ScoreRecord& r) { return r.label == label; });
      if (!has_pos) {
        grid.warnings.push_back("window " + std::to_string(window) + ": no windows labeled " +
                                std::string(behavior_name(label)) + "; cell left absent");
        continue;
      }
      GridCell& cell = grid.cells[wi][li];
      cell.roc = roc_auc(records, label);
      cell.auc = cell.roc.auc;
      cell.present = true;
    }
    outcome.trained.push_back(std::move(trained));
  }
  compute_means(grid);
  return outcome;
}

// --------------------------- report rendering ---------------------------

// Delimited form: optional `# key=value` provenance lines, then
// window,label,auc rows (auc `n/a` for absent cells).
inline std::string render_grid_csv(const GridResult& grid,
                                   const std::vector<std::pair<std::string, std::string>>&
                                       provenance = {}) {
  std::string out = "# driveprof_grid v1\n";
  for (const auto& [k, v] : provenance) out += "# " + k + "=" + v + "\n";
  out += "window,label,auc\n";
  for (size_t w = 0; w < grid.window_sizes.size(); ++w)
    for (size_t l = 0; l < grid.labels.size(); ++l) {
      const GridCell& cell = grid.cells[w][l];
      out += std::to_string(grid.window_sizes[w]) + ',' +
             std::string(behavior_name(grid.labels[l])) + ',' +
             (cell.present ? textio::format_f64(cell.auc) : "n/a") + '\n';
    }
  return out;
}

inline GridResult parse_grid_csv(std::string_view text) {
  GridResult grid;
  std::map<int, size_t> window_index;
  std::map<Behavior, size_t> label_index;
  struct Row {
    int window;
    Behavior label;
    bool present;
    double auc;
  };
  std::vector<Row> rows;
  bool header_seen = false;
  textio::for_each_line(text, [&](std::string_view line, long line_no) {
    if (textio::trim(line).front() == '#') return;
    if (!header_seen) {
      header_seen = true;
      return;
    }
    auto fields = textio::split(line);
    if (fields.size() != 3) throw ParseError("expected window,label,auc", line_no);
    auto behavior = parse_behavior(fields[1]);
    if (!behavior) throw ParseError("unknown behavior '" + std::string(fields[1]) + "'", line_no);
    Row row;
    row.window = static_cast<int>(textio::parse_i64(fields[0], line_no));
    row.label = *behavior;
    row.present = fields[2] != "n/a";
    row.auc = row.present ? textio::parse_f64(fields[2], line_no)
                          : std::numeric_limits<double>::quiet_NaN();
    rows.push_back(row);
    if (!window_index.count(row.window)) {
      window_index[row.window] = grid.window_sizes.size();
      grid.window_sizes.push_back(row.window);
    }
    if (!label_index.count(row.label)) {
      label_index[row.label] = grid.labels.size();
      grid.labels.push_back(row.label);
    }
  });
  grid.cells.assign(grid.window_sizes.size(), std::vector<GridCell>(grid.labels.size()));
  for (const auto& row : rows) {
    GridCell& cell = grid.cells[window_index[row.window]][label_index[row.label]];
    cell.present = row.present;
    cell.auc = row.auc;
  }
  compute_means(grid);
  return grid;
}

// Human-readable table: labels as rows, window sizes as columns, marginal
// means on the right and bottom, grand mean last.
inline std::string render_grid_table(const GridResult& grid) {
  std::ostringstream os;
  auto fmt = [](double v) {
    if (std::isnan(v)) return std::string("   n/a");
    std::ostringstream c;
    c << std::fixed << std::setprecision(4) << v;
    return c.str();
  };
  constexpr int label_width = 30;
  constexpr int col_width = 10;

  os << std::left << std::setw(label_width) << "label";
  for (int w : grid.window_sizes) os << std::right << std::setw(col_width) << ("w=" + std::to_string(w));
  os << std::right << std::setw(16) << "avg by label" << '\n';

  for (size_t l = 0; l < grid.labels.size(); ++l) {
    os << std::left << std::setw(label_width) << std::string(behavior_name(grid.labels[l]));
    for (size_t w = 0; w < grid.window_sizes.size(); ++w)
      os << std::right << std::setw(col_width) << fmt(grid.cells[w][l].auc);
    os << std::right << std::setw(16) << fmt(grid.mean_by_label[l]) << '\n';
  }

  os << std::left << std::setw(label_width) << "avg by window";
  for (size_t w = 0; w < grid.window_sizes.size(); ++w)
    os << std::right << std::setw(col_width) << fmt(grid.mean_by_window[w]);
  os << '\n';
  os << std::left << std::setw(label_width) << "average of auc";
  os << std::right
     << std::setw(col_width * static_cast<int>(grid.window_sizes.size()) + 16)
     << fmt(grid.grand_mean) << '\n';
  return os.str();
}

inline std::string render_roc_csv(const RocResult& roc) {
  std::string out = "fpr,tpr\n";
  for (const auto& [fpr, tpr] : roc.curve)
    out += textio::format_f64(fpr) + ',' + textio::format_f64(tpr) + '\n';
  return out;
}

}  // namespace driveprof
