// anchor_align/aligner.h

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

#ifndef ANCHOR_ALIGN_ALIGNER_H_
#define ANCHOR_ALIGN_ALIGNER_H_

#include <optional>
#include <string>
#include <vector>

#include "anchor_align/posterior_io.h"
#include "anchor_align/textprep.h"
#include "anchor_align/trellis.h"

namespace anchor_align {

struct AlignParams {
  double threshold = -2.0;  // log s_seg an anchoring utterance must reach
  double window_s = 120.0;
  double window_step_s = 60.0;
  double max_window_s = 600.0;
  int max_utts_per_window = 12;
  int fragment_frames = 30;
  double reference_s = 8.0;
  double short_penalty = -4.0;
  FragmentMean fragment_mean = FragmentMean::kLog;
  TrellisOptions trellis;

  // Throws std::invalid_argument on violated invariants.
  void validate() const;
};

// Acceptance test for the last utterance of a batch.
inline bool meets_threshold(double s_seg, double threshold) { return s_seg >= threshold; }

struct Anchor {
  int utt_index;
  int end_frame;
  double s_seg;
};

enum class WindowOutcome { kAccepted, kGrow, kSkip };

struct IterationRecord {
  int window_start_frame;
  int window_len_frames;
  int n_utts_tried;
  WindowOutcome outcome;
  int n_accepted = 0;  // utterances stored when accepted
  int skipped_utt = -1;
};

struct AlignmentRun {
  std::string file_id;
  std::vector<UtteranceAlignment> utterances;  // aligned, in order
  std::vector<int> skipped;
  std::vector<Anchor> anchors;
  std::vector<IterationRecord> iterations_log;
};

struct WindowResult {
  std::optional<std::vector<UtteranceAlignment>> best;
  double last_score = kLogZero;  // last-utterance score of `best`, or of the final attempt
};

struct Window {
  int start_frame;
  int len_frames;
};

// Aligns decreasing prefixes of `utts` inside the window and keeps the one
// whose last utterance scores highest. Only the last utterance is tested
// against the threshold; earlier ones are kept whatever their score.
WindowResult align_window(const PosteriorMatrix &pm, Window window,
                          const std::vector<Utterance> &utts, const Vocab &vocab,
                          const AlignParams &params);

// Full anchor-driven pass over one file. Utterances must carry
// est_duration_s (see estimate_time_refs). `first_frame` is the initial
// anchor, normally the first voiced frame.
AlignmentRun align_file(const PosteriorMatrix &pm, const std::vector<Utterance> &utts,
                        const Vocab &vocab, const AlignParams &params, int first_frame = 0,
                        std::string file_id = {});

// One utterance on the original timeline, in seconds.
struct TimedUtterance {
  int utt_index;
  double start_s;
  double end_s;  // exclusive: end of the last character frame
  double s_seg;
  double s_seg_norm;
  bool penalized;
  bool accepted;
  bool anchor;
};

std::vector<TimedUtterance> frames_to_seconds(const AlignmentRun &run, const FrameMap &fm,
                                              double frame_duration_s);

const char *outcome_name(WindowOutcome outcome);

}  // namespace anchor_align

#endif  // ANCHOR_ALIGN_ALIGNER_H_
