// filters.cc

// Copyright 2026  The anchor-align Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include "anchor_align/filters.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "anchor_align/trellis.h"

namespace anchor_align {

namespace {

double hours(const std::vector<ScoredSegment> &segs) {
  double s = 0.0;
  for (const auto &x : segs) s += x.duration_s();
  return s / 3600.0;
}

template <typename Keep>
FilterResult run_filter(const std::vector<ScoredSegment> &segs, FilterMethod method,
                        double cutoff, Keep keep) {
  FilterResult r;
  for (const auto &s : segs)
    if (keep(s)) r.kept.push_back(s);
  r.report = {method,      static_cast<int>(segs.size()), static_cast<int>(r.kept.size()),
              hours(segs), hours(r.kept),                cutoff};
  return r;
}

std::string fmt(const char *f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

}  // namespace

const char *filter_method_name(FilterMethod m) {
  switch (m) {
    case FilterMethod::kAbsolute: return "absolute";
    case FilterMethod::kChebyshev: return "chebyshev";
    case FilterMethod::kNormalized: return "normalized";
  }
  return "?";
}

FilterMethod parse_filter_method(const std::string &name) {
  if (name == "absolute") return FilterMethod::kAbsolute;
  if (name == "chebyshev") return FilterMethod::kChebyshev;
  if (name == "normalized") return FilterMethod::kNormalized;
  throw std::invalid_argument("unknown filter method '" + name + "'");
}

FilterResult filter_absolute(const std::vector<ScoredSegment> &segs, double cutoff) {
  return run_filter(segs, FilterMethod::kAbsolute, cutoff,
                    [cutoff](const ScoredSegment &s) { return s.s_seg >= cutoff; });
}

double chebyshev_k(double worst_fraction) {
  if (!(worst_fraction > 0.0 && worst_fraction < 1.0))
    throw std::invalid_argument("worst_fraction must lie in (0, 1)");
  return std::sqrt(1.0 / worst_fraction);
}

FilterResult filter_chebyshev(const std::vector<ScoredSegment> &segs, double worst_fraction) {
  const double k = chebyshev_k(worst_fraction);
  if (segs.size() < 2) throw std::invalid_argument("chebyshev filter needs at least 2 scores");
  double mean = 0.0;
  for (const auto &s : segs) mean += s.s_seg;
  mean /= static_cast<double>(segs.size());
  double var = 0.0;
  for (const auto &s : segs) var += (s.s_seg - mean) * (s.s_seg - mean);
  const double sd = std::sqrt(var / static_cast<double>(segs.size()));
  const double cutoff = mean - k * sd;
  return run_filter(segs, FilterMethod::kChebyshev, cutoff,
                    [cutoff](const ScoredSegment &s) { return s.s_seg >= cutoff; });
}

FilterResult filter_normalized(const std::vector<ScoredSegment> &segs, double cutoff,
                               double reference_s) {
  for (const auto &s : segs)
    if (!(s.duration_s() > 0.0))
      throw std::invalid_argument("zero-duration alignment for " + s.file_id + " utterance " +
                                  std::to_string(s.utt_index));
  return run_filter(segs, FilterMethod::kNormalized, cutoff, [&](const ScoredSegment &s) {
    return normalize_score(s.s_seg, s.duration_s(), reference_s) >= cutoff;
  });
}

FilterResult apply_filter(const std::vector<ScoredSegment> &segs, const FilterConfig &cfg) {
  switch (cfg.method) {
    case FilterMethod::kAbsolute: return filter_absolute(segs, cfg.cutoff);
    case FilterMethod::kChebyshev: return filter_chebyshev(segs, cfg.worst_fraction);
    case FilterMethod::kNormalized: return filter_normalized(segs, cfg.cutoff, cfg.reference_s);
  }
  throw std::invalid_argument("unknown filter method");
}

std::vector<HistogramBin> score_histogram(const std::vector<double> &scores, double bin_width,
                                          double min) {
  if (!(bin_width > 0.0)) throw std::invalid_argument("bin width must be positive");
  // Bins start at min + i * width and run up to the one that contains 0.
  const int nbins = static_cast<int>(std::floor(-min / bin_width + 1e-9)) + 1;
  std::vector<HistogramBin> bins;
  for (int i = 0; i < std::max(1, nbins); ++i) bins.push_back({min + i * bin_width, 0});
  for (double s : scores) {
    long long i = static_cast<long long>(std::floor((s - min) / bin_width));
    i = std::clamp<long long>(i, 0, static_cast<long long>(bins.size()) - 1);
    ++bins[i].count;
  }
  return bins;
}

std::vector<RecoveryRow> recovery_stats(const std::vector<SplitInput> &splits,
                                        const FilterConfig &cfg) {
  std::vector<RecoveryRow> rows;
  RecoveryRow total{"total", 0.0, 0.0, 0.0};
  for (const auto &sp : splits) {
    RecoveryRow row{sp.name, sp.total_s / 3600.0, hours(sp.segments), 0.0};
    if (!sp.segments.empty()) {
      // Chebyshev is undefined on a single score; it then keeps everything.
      if (cfg.method == FilterMethod::kChebyshev && sp.segments.size() < 2)
        row.filtered_hours = row.aligned_hours;
      else
        row.filtered_hours = apply_filter(sp.segments, cfg).report.kept_hours;
    }
    total.total_hours += row.total_hours;
    total.aligned_hours += row.aligned_hours;
    total.filtered_hours += row.filtered_hours;
    rows.push_back(row);
  }
  rows.push_back(total);
  return rows;
}

std::string histogram_csv(const std::vector<HistogramBin> &bins) {
  std::string out = "bin_start,count\n";
  for (const auto &b : bins) out += fmt("%.2f", b.bin_start) + "," + std::to_string(b.count) + "\n";
  return out;
}

std::string recovery_csv(const std::vector<RecoveryRow> &rows) {
  std::string out = "split,total_hours,aligned_hours,filtered_hours\n";
  for (const auto &r : rows)
    out += r.split + "," + fmt("%.4f", r.total_hours) + "," + fmt("%.4f", r.aligned_hours) + "," +
           fmt("%.4f", r.filtered_hours) + "\n";
  return out;
}

std::string report_csv(const FilterReport &r) {
  return std::string("method,input_count,kept_count,input_hours,kept_hours,cutoff\n") +
         filter_method_name(r.method) + "," + std::to_string(r.input_count) + "," +
         std::to_string(r.kept_count) + "," + fmt("%.6f", r.input_hours) + "," +
         fmt("%.6f", r.kept_hours) + "," + fmt("%.6f", r.cutoff) + "\n";
}

}  // namespace anchor_align
