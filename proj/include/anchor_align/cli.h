// anchor_align/cli.h

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

#ifndef ANCHOR_ALIGN_CLI_H_
#define ANCHOR_ALIGN_CLI_H_

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "anchor_align/aligner.h"
#include "anchor_align/filters.h"

namespace anchor_align {

enum class LogLevel { kQuiet, kInfo, kDebug };

// Reads ANCHOR_ALIGN_LOG (quiet, info, debug); unset or unknown means info.
LogLevel log_level_from_env();

struct RunConfig {
  AlignParams align;
  std::filesystem::path posterior_dir;
  std::filesystem::path transcript_dir;
  std::filesystem::path regions_dir;  // empty: no speech regions
  std::filesystem::path vocab_path;   // empty: built-in Spanish inventory
  std::filesystem::path output_dir;
  std::vector<std::string> output_formats{"jsonl"};
  int workers = 1;
  int pass = 1;             // copied into every jsonl record
  double max_gap_s = 30.0;  // non-speech longer than this is cut
  LogLevel log_level = LogLevel::kInfo;

  // Throws std::invalid_argument.
  void validate() const;
};

// Aligns every posterior file of the corpus. Returns 0 when every paired
// file produced an alignment run, 1 if any file failed to load.
int cmd_align(const RunConfig &cfg, std::ostream &log);

// Reads alignment jsonl files (or directories of them), filters the pooled
// segments, writes <stem>.filtered.jsonl per input plus filter_report.csv.
int cmd_filter(const std::vector<std::filesystem::path> &inputs, const FilterConfig &filter,
               const std::filesystem::path &output_dir, std::ostream &log);

// Each input is `name=path` or a bare path (named after the directory). A
// path is an align output directory or a single jsonl file; split totals come
// from the runs.tsv written next to the jsonl files. Writes histogram.csv and
// recovery.csv.
int cmd_stats(const std::vector<std::string> &inputs, const FilterConfig &filter,
              const std::filesystem::path &output_dir, std::ostream &log);

// Writes <name>.ctcp, <name>.txt, <name>.regions and <name>.truth.tsv.
int cmd_synth(const std::filesystem::path &manifest, const std::filesystem::path &output_dir,
              const std::string &name, const std::filesystem::path &vocab_path, std::ostream &log);

// One aligned utterance as stored in the jsonl output.
struct AlignmentRecord {
  std::string file_id;
  int utt_index = 0;
  std::string text;
  double start_s = 0.0;
  double end_s = 0.0;
  double s_seg = 0.0;
  double s_seg_norm = 0.0;
  bool penalized = false;
  bool accepted = false;
  bool anchor = false;
  int pass = 1;
};

std::string jsonl_line(const AlignmentRecord &r);
std::string ctm_line(const AlignmentRecord &r);
std::string segments_line(const AlignmentRecord &r);
// Throws FormatError naming `where` and the line number.
std::vector<AlignmentRecord> read_alignment_jsonl(const std::filesystem::path &path);
std::vector<AlignmentRecord> parse_alignment_jsonl(const std::string &content,
                                                   const std::string &where);

// Writes through a temporary file in the same directory and renames it.
void write_file_atomic(const std::filesystem::path &path, const std::string &content);

// Command-line entry point.
int run_cli(int argc, const char *const *argv, std::ostream &out, std::ostream &err);

}  // namespace anchor_align

#endif  // ANCHOR_ALIGN_CLI_H_
