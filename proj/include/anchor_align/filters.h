// anchor_align/filters.h

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

#ifndef ANCHOR_ALIGN_FILTERS_H_
#define ANCHOR_ALIGN_FILTERS_H_

#include <string>
#include <vector>

namespace anchor_align {

// What the filters need to know about one aligned utterance.
struct ScoredSegment {
  std::string file_id;
  int utt_index = 0;
  double start_s = 0.0;
  double end_s = 0.0;
  double s_seg = 0.0;

  double duration_s() const { return end_s - start_s; }
};

enum class FilterMethod { kAbsolute, kChebyshev, kNormalized };

const char *filter_method_name(FilterMethod m);
// Throws std::invalid_argument for unknown names.
FilterMethod parse_filter_method(const std::string &name);

struct FilterReport {
  FilterMethod method = FilterMethod::kAbsolute;
  int input_count = 0;
  int kept_count = 0;
  double input_hours = 0.0;
  double kept_hours = 0.0;
  double cutoff = 0.0;
};

struct FilterResult {
  std::vector<ScoredSegment> kept;
  FilterReport report;
};

inline constexpr double kAbsoluteCutoff = -1.0;
inline constexpr double kChebyshevWorstFraction = 0.15;
inline constexpr double kNormalizedCutoff = -1.5;
inline constexpr double kReferenceSeconds = 8.0;

FilterResult filter_absolute(const std::vector<ScoredSegment> &segs,
                             double cutoff = kAbsoluteCutoff);

// Cutoff mean - k * stddev with k = sqrt(1 / worst_fraction); by Chebyshev's
// inequality at most worst_fraction of the scores fall below it.
FilterResult filter_chebyshev(const std::vector<ScoredSegment> &segs,
                              double worst_fraction = kChebyshevWorstFraction);
double chebyshev_k(double worst_fraction);

// Keeps segments whose length-normalized score reaches the cutoff.
FilterResult filter_normalized(const std::vector<ScoredSegment> &segs,
                               double cutoff = kNormalizedCutoff,
                               double reference_s = kReferenceSeconds);

struct FilterConfig {
  FilterMethod method = FilterMethod::kAbsolute;
  double cutoff = kAbsoluteCutoff;  // absolute / normalized
  double worst_fraction = kChebyshevWorstFraction;
  double reference_s = kReferenceSeconds;
};
FilterResult apply_filter(const std::vector<ScoredSegment> &segs, const FilterConfig &cfg);

struct HistogramBin {
  double bin_start;
  int count;
};

// Half-open bins of width bin_width from `min` up to the bin holding 0.
// Scores below `min` land in the lowest bin.
std::vector<HistogramBin> score_histogram(const std::vector<double> &scores,
                                          double bin_width = 0.25, double min = -8.0);

struct SplitInput {
  std::string name;
  double total_s = 0.0;  // audio duration of the split
  std::vector<ScoredSegment> segments;
};

struct RecoveryRow {
  std::string split;
  double total_hours;
  double aligned_hours;
  double filtered_hours;
};

// One row per split plus a "total" row.
std::vector<RecoveryRow> recovery_stats(const std::vector<SplitInput> &splits,
                                        const FilterConfig &cfg);

std::string histogram_csv(const std::vector<HistogramBin> &bins);
std::string recovery_csv(const std::vector<RecoveryRow> &rows);
std::string report_csv(const FilterReport &report);

}  // namespace anchor_align

#endif  // ANCHOR_ALIGN_FILTERS_H_
