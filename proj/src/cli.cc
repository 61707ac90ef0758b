// cli.cc

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

#include "anchor_align/cli.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"

#include "anchor_align/errors.h"
#include "anchor_align/synthdata.h"
#include "anchor_align/textprep.h"

namespace anchor_align {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace {

std::string fmt(const char *format, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), format, v);
  return buf;
}

double round3(double v) { return std::round(v * 1000.0) / 1000.0; }

std::string read_file(const fs::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Serializes log lines coming from worker threads.
class Logger {
 public:
  Logger(std::ostream &out, LogLevel level) : out_(out), level_(level) {}
  void info(const std::string &msg) { write(LogLevel::kInfo, msg); }
  void debug(const std::string &msg) { write(LogLevel::kDebug, msg); }
  // Warnings and errors are shown unless the log is quiet.
  void warn(const std::string &msg) { write(LogLevel::kInfo, "warning: " + msg); }
  void error(const std::string &msg) {
    std::lock_guard<std::mutex> lock(mu_);
    out_ << "error: " << msg << '\n';
  }

 private:
  void write(LogLevel at, const std::string &msg) {
    if (static_cast<int>(level_) < static_cast<int>(at)) return;
    std::lock_guard<std::mutex> lock(mu_);
    out_ << msg << '\n';
  }
  std::ostream &out_;
  LogLevel level_;
  std::mutex mu_;
};

Vocab vocab_or_default(const fs::path &path) {
  return path.empty() ? spanish_vocab() : load_vocab(path);
}

bool is_posterior_file(const fs::path &p) {
  const auto ext = p.extension().string();
  return ext == ".ctcp" || ext == ".post";
}

struct FileJob {
  std::string file_id;
  fs::path posteriors;
  fs::path transcript;
  fs::path regions;  // may be empty
};

struct FileResult {
  bool ok = false;
  std::string error;
  double audio_s = 0.0;
  double speech_s = 0.0;
  int num_utts = 0;
  AlignmentRun run;
  std::vector<AlignmentRecord> records;
  double frame_duration_s = 0.0;
  std::string warning;
};

// Compressed index of the first voiced frame.
int first_voiced_frame(const SpeechRegions &regions, const FrameMap &fm, double fd) {
  if (regions.empty()) return 0;
  const int f0 = static_cast<int>(std::lround(regions.regions().front().start_s / fd));
  for (const auto &seg : fm.segments()) {
    if (f0 < seg.original_start) return seg.compressed_start;
    if (f0 < seg.original_start + seg.length) return seg.compressed_start + f0 - seg.original_start;
  }
  return 0;
}

FileResult align_one(const FileJob &job, const Vocab &vocab, const RunConfig &cfg) {
  FileResult res;
  try {
    const PosteriorMatrix original = load_posteriors(job.posteriors, vocab);
    const double fd = original.frame_duration_s();
    res.frame_duration_s = fd;
    res.audio_s = original.duration_s();
    std::vector<Utterance> utts = load_transcript(job.transcript, vocab);

    SpeechRegions regions;
    if (!job.regions.empty()) regions = load_speech_regions(job.regions);
    CompressedPosteriors cp{original, FrameMap::identity(original.frames())};
    res.num_utts = static_cast<int>(utts.size());
    res.run.file_id = job.file_id;
    if (!job.regions.empty()) {
      try {
        cp = apply_speech_regions(original, regions, cfg.max_gap_s);
      } catch (const NoSpeechError &e) {
        // Nothing to align against: every utterance is skipped.
        for (const auto &u : utts) res.run.skipped.push_back(u.utt_index);
        res.warning = job.file_id + ": " + e.what() + "; all utterances skipped";
        res.ok = true;
        return res;
      }
    }
    const PosteriorMatrix &pm = cp.posteriors;
    res.speech_s = pm.duration_s();

    if (!utts.empty()) {
      utts = estimate_time_refs(std::move(utts), pm.duration_s());
      res.run = align_file(pm, utts, vocab, cfg.align, first_voiced_frame(regions, cp.frame_map, fd),
                           job.file_id);
    }

    std::map<int, const Utterance *> by_index;
    for (const auto &u : utts) by_index[u.utt_index] = &u;
    for (const auto &t : frames_to_seconds(res.run, cp.frame_map, fd)) {
      AlignmentRecord r;
      r.file_id = job.file_id;
      r.utt_index = t.utt_index;
      r.text = by_index.at(t.utt_index)->text;
      r.start_s = t.start_s;
      r.end_s = t.end_s;
      r.s_seg = t.s_seg;
      r.s_seg_norm = t.s_seg_norm;
      r.penalized = t.penalized;
      r.accepted = t.accepted;
      r.anchor = t.anchor;
      r.pass = cfg.pass;
      res.records.push_back(std::move(r));
    }
    res.ok = true;
  } catch (const std::exception &e) {
    res.error = job.file_id + ": " + e.what();
  }
  return res;
}

std::string iteration_lines(const std::string &file_id, const AlignmentRun &run, double fd) {
  std::string out;
  for (std::size_t i = 0; i < run.iterations_log.size(); ++i) {
    const auto &it = run.iterations_log[i];
    out += file_id + '\t' + std::to_string(i) + '\t' +
           fmt("%.3f", it.window_start_frame * fd) + '\t' +
           fmt("%.3f", it.window_len_frames * fd) + '\t' + std::to_string(it.n_utts_tried) +
           '\t' + outcome_name(it.outcome) + '\t' + std::to_string(it.n_accepted) + '\t' +
           std::to_string(it.skipped_utt) + '\n';
  }
  return out;
}

std::vector<fs::path> expand_jsonl_inputs(const std::vector<fs::path> &inputs) {
  std::vector<fs::path> files;
  for (const auto &in : inputs) {
    if (fs::is_directory(in)) {
      std::vector<fs::path> found;
      for (const auto &e : fs::directory_iterator(in)) {
        const auto name = e.path().filename().string();
        if (e.is_regular_file() && name.size() > 12 &&
            name.compare(name.size() - 12, 12, ".align.jsonl") == 0)
          found.push_back(e.path());
      }
      std::sort(found.begin(), found.end());
      files.insert(files.end(), found.begin(), found.end());
    } else if (fs::is_regular_file(in)) {
      files.push_back(in);
    } else {
      throw FormatError("no such input: " + in.string());
    }
  }
  return files;
}

ScoredSegment to_segment(const AlignmentRecord &r) {
  return {r.file_id, r.utt_index, r.start_s, r.end_s, r.s_seg};
}

// Audio seconds per file_id from runs.tsv.
std::map<std::string, double> read_runs_tsv(const fs::path &path) {
  std::map<std::string, double> out;
  if (!fs::exists(path)) return out;
  std::istringstream in(read_file(path));
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    if (++lineno == 1 || line.empty()) continue;  // header
    std::istringstream ls(line);
    std::string id;
    double audio_s = 0.0;
    if (!(ls >> id >> audio_s))
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": malformed row");
    out[id] = audio_s;
  }
  return out;
}

}  // namespace

LogLevel log_level_from_env() {
  const char *v = std::getenv("ANCHOR_ALIGN_LOG");
  if (!v) return LogLevel::kInfo;
  const std::string s(v);
  if (s == "quiet") return LogLevel::kQuiet;
  if (s == "debug") return LogLevel::kDebug;
  return LogLevel::kInfo;
}

void RunConfig::validate() const {
  align.validate();
  auto need_dir = [](const fs::path &p, const char *what) {
    if (p.empty() || !fs::is_directory(p))
      throw std::invalid_argument(std::string(what) + " is not a directory: " + p.string());
  };
  need_dir(posterior_dir, "posterior_dir");
  need_dir(transcript_dir, "transcript_dir");
  if (!regions_dir.empty()) need_dir(regions_dir, "regions_dir");
  if (output_dir.empty()) throw std::invalid_argument("output_dir is required");
  if (workers < 1) throw std::invalid_argument("workers must be >= 1");
  if (output_formats.empty()) throw std::invalid_argument("no output format selected");
  for (const auto &f : output_formats)
    if (f != "jsonl" && f != "ctm" && f != "segments")
      throw std::invalid_argument("unknown output format: " + f);
}

// ---------------------------------------------------------------------------
// Output formats

std::string jsonl_line(const AlignmentRecord &r) {
  ordered_json j;
  j["file_id"] = r.file_id;
  j["utt_index"] = r.utt_index;
  j["text"] = r.text;
  j["start_s"] = round3(r.start_s);
  j["end_s"] = round3(r.end_s);
  j["s_seg"] = r.s_seg;
  j["s_seg_norm"] = r.s_seg_norm;
  j["penalized"] = r.penalized;
  j["accepted"] = r.accepted;
  j["anchor"] = r.anchor;
  j["pass"] = r.pass;
  return j.dump() + '\n';
}

std::string ctm_line(const AlignmentRecord &r) {
  // CTM fields are blank-separated, so words inside the utterance are joined
  // with the model's word separator.
  std::string text = r.text;
  std::replace(text.begin(), text.end(), ' ', '|');
  return r.file_id + " 1 " + fmt("%.3f", round3(r.start_s)) + ' ' +
         fmt("%.3f", round3(r.end_s) - round3(r.start_s)) + ' ' + text + ' ' +
         fmt("%.6f", std::exp(r.s_seg)) + '\n';
}

std::string segments_line(const AlignmentRecord &r) {
  char id[32];
  std::snprintf(id, sizeof(id), "-%04d", r.utt_index);
  return r.file_id + id + ' ' + r.file_id + ' ' + fmt("%.3f", round3(r.start_s)) + ' ' +
         fmt("%.3f", round3(r.end_s)) + '\n';
}

std::vector<AlignmentRecord> parse_alignment_jsonl(const std::string &content,
                                                   const std::string &where) {
  std::vector<AlignmentRecord> out;
  std::istringstream in(content);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      AlignmentRecord r;
      r.file_id = j.at("file_id").get<std::string>();
      r.utt_index = j.at("utt_index").get<int>();
      r.text = j.value("text", std::string());
      r.start_s = j.at("start_s").get<double>();
      r.end_s = j.at("end_s").get<double>();
      r.s_seg = j.at("s_seg").get<double>();
      r.s_seg_norm = j.value("s_seg_norm", 0.0);
      r.penalized = j.value("penalized", false);
      r.accepted = j.value("accepted", false);
      r.anchor = j.value("anchor", false);
      r.pass = j.value("pass", 1);
      if (!(r.end_s >= r.start_s)) throw FormatError("end_s before start_s");
      out.push_back(std::move(r));
    } catch (const std::exception &e) {
      throw FormatError(where + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

std::vector<AlignmentRecord> read_alignment_jsonl(const fs::path &path) {
  return parse_alignment_jsonl(read_file(path), path.string());
}

void write_file_atomic(const fs::path &path, const std::string &content) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw std::runtime_error("write failed: " + tmp.string());
  }
  fs::rename(tmp, path);
}

// ---------------------------------------------------------------------------
// Commands

int cmd_align(const RunConfig &cfg, std::ostream &log_stream) {
  cfg.validate();
  Logger log(log_stream, cfg.log_level);
  const Vocab vocab = vocab_or_default(cfg.vocab_path);

  std::vector<FileJob> jobs;
  std::vector<fs::path> posteriors;
  for (const auto &e : fs::directory_iterator(cfg.posterior_dir))
    if (e.is_regular_file() && is_posterior_file(e.path())) posteriors.push_back(e.path());
  std::sort(posteriors.begin(), posteriors.end());
  for (const auto &p : posteriors) {
    FileJob job{p.stem().string(), p, cfg.transcript_dir / (p.stem().string() + ".txt"), {}};
    if (!fs::is_regular_file(job.transcript)) {
      log.warn("no transcript for " + p.filename().string() + ", skipped");
      continue;
    }
    if (!cfg.regions_dir.empty()) {
      const fs::path r = cfg.regions_dir / (job.file_id + ".regions");
      if (fs::is_regular_file(r)) job.regions = r;
    }
    jobs.push_back(std::move(job));
  }
  if (jobs.empty()) {
    log.warn("no posterior/transcript pairs in " + cfg.posterior_dir.string());
    return 0;
  }
  fs::create_directories(cfg.output_dir);

  std::vector<FileResult> results(jobs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      results[i] = align_one(jobs[i], vocab, cfg);
      const auto &r = results[i];
      if (!r.ok) {
        log.error(r.error);
        continue;
      }
      if (!r.warning.empty()) log.warn(r.warning);
      log.info(jobs[i].file_id + ": aligned " + std::to_string(r.run.utterances.size()) + "/" +
               std::to_string(r.num_utts) + " utterances, " +
               std::to_string(r.run.skipped.size()) + " skipped, " +
               std::to_string(r.run.iterations_log.size()) + " iterations");
      if (cfg.log_level == LogLevel::kDebug) {
        std::istringstream lines(iteration_lines(jobs[i].file_id, r.run, r.frame_duration_s));
        for (std::string l; std::getline(lines, l);) log.debug("  " + l);
      }
      auto want = [&](const char *f) {
        return std::find(cfg.output_formats.begin(), cfg.output_formats.end(), f) !=
               cfg.output_formats.end();
      };
      std::string jsonl, ctm, segments;
      for (const auto &rec : r.records) {
        jsonl += jsonl_line(rec);
        ctm += ctm_line(rec);
        segments += segments_line(rec);
      }
      const fs::path base = cfg.output_dir / jobs[i].file_id;
      try {
        if (want("jsonl")) write_file_atomic(base.string() + ".align.jsonl", jsonl);
        if (want("ctm")) write_file_atomic(base.string() + ".ctm", ctm);
        if (want("segments")) write_file_atomic(base.string() + ".segments", segments);
      } catch (const std::exception &e) {
        results[i].ok = false;
        log.error(e.what());
      }
    }
  };
  const int n_threads = std::min<int>(cfg.workers, static_cast<int>(jobs.size()));
  std::vector<std::thread> pool;
  for (int t = 1; t < n_threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto &t : pool) t.join();

  std::string iters =
      "file_id\titeration\twindow_start_s\twindow_len_s\tn_utts\toutcome\tn_accepted\tskipped_utt\n";
  std::string runs = "file_id\taudio_s\tspeech_s\tn_utts\tn_aligned\tn_skipped\n";
  int status = 0;
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    const auto &r = results[i];
    if (!r.ok) {
      status = 1;
      continue;
    }
    iters += iteration_lines(jobs[i].file_id, r.run, r.frame_duration_s);
    runs += jobs[i].file_id + '\t' + fmt("%.3f", r.audio_s) + '\t' + fmt("%.3f", r.speech_s) +
            '\t' + std::to_string(r.num_utts) + '\t' + std::to_string(r.run.utterances.size()) +
            '\t' + std::to_string(r.run.skipped.size()) + '\n';
  }
  write_file_atomic(cfg.output_dir / "iterations.log", iters);
  write_file_atomic(cfg.output_dir / "runs.tsv", runs);
  return status;
}

int cmd_filter(const std::vector<fs::path> &inputs, const FilterConfig &filter,
               const fs::path &output_dir, std::ostream &log_stream) {
  Logger log(log_stream, log_level_from_env());
  const auto files = expand_jsonl_inputs(inputs);
  std::vector<std::vector<AlignmentRecord>> per_file;
  std::vector<ScoredSegment> pooled;
  for (const auto &f : files) {
    per_file.push_back(read_alignment_jsonl(f));
    for (const auto &r : per_file.back()) pooled.push_back(to_segment(r));
  }
  if (files.empty()) log.warn("no alignment files to filter");

  FilterResult result;
  if (pooled.empty() && filter.method == FilterMethod::kChebyshev) {
    result.report.method = filter.method;  // nothing to estimate from
  } else {
    result = apply_filter(pooled, filter);
  }
  std::map<std::pair<std::string, int>, bool> kept;
  for (const auto &s : result.kept) kept[{s.file_id, s.utt_index}] = true;

  fs::create_directories(output_dir);
  for (std::size_t i = 0; i < files.size(); ++i) {
    std::string out;
    for (const auto &r : per_file[i])
      if (kept.count({r.file_id, r.utt_index})) out += jsonl_line(r);
    std::string name = files[i].filename().string();
    const auto dot = name.find(".align.jsonl");
    name = (dot == std::string::npos ? files[i].stem().string() : name.substr(0, dot)) +
           ".filtered.jsonl";
    write_file_atomic(output_dir / name, out);
  }
  write_file_atomic(output_dir / "filter_report.csv", report_csv(result.report));
  log.info(std::string(filter_method_name(filter.method)) + ": kept " +
           std::to_string(result.report.kept_count) + "/" +
           std::to_string(result.report.input_count) + " segments, cutoff " +
           fmt("%.4f", result.report.cutoff));
  return 0;
}

int cmd_stats(const std::vector<std::string> &inputs, const FilterConfig &filter,
              const fs::path &output_dir, std::ostream &log_stream) {
  Logger log(log_stream, log_level_from_env());
  std::vector<SplitInput> splits;
  std::vector<double> scores;
  for (const auto &spec : inputs) {
    const auto eq = spec.find('=');
    fs::path path = eq == std::string::npos ? fs::path(spec) : fs::path(spec.substr(eq + 1));
    const fs::path dir = fs::is_directory(path) ? path : path.parent_path();
    std::string name = eq == std::string::npos ? fs::absolute(dir).lexically_normal().filename().string()
                                               : spec.substr(0, eq);
    if (name.empty()) name = "split";

    SplitInput split;
    split.name = name;
    const auto totals = read_runs_tsv(dir / "runs.tsv");
    for (const auto &f : expand_jsonl_inputs({path})) {
      for (const auto &r : read_alignment_jsonl(f)) {
        split.segments.push_back(to_segment(r));
        scores.push_back(r.s_seg);
      }
    }
    if (fs::is_directory(path)) {
      for (const auto &[id, s] : totals) split.total_s += s;
    } else {
      // A single jsonl file counts only its own audio.
      std::string stem = path.filename().string();
      stem = stem.substr(0, stem.find(".align.jsonl"));
      if (auto it = totals.find(stem); it != totals.end()) split.total_s = it->second;
    }
    if (totals.empty()) log.warn("no runs.tsv next to " + path.string() + "; total hours = 0");
    splits.push_back(std::move(split));
  }

  std::vector<RecoveryRow> rows;
  if (!splits.empty()) {
    if (filter.method == FilterMethod::kChebyshev) {
      std::size_t n = 0;
      for (const auto &s : splits) n += s.segments.size();
      if (n < 2) throw std::invalid_argument("chebyshev filter needs at least two segments");
    }
    rows = recovery_stats(splits, filter);
  }
  fs::create_directories(output_dir);
  write_file_atomic(output_dir / "histogram.csv",
                    scores.empty() ? histogram_csv({}) : histogram_csv(score_histogram(scores)));
  write_file_atomic(output_dir / "recovery.csv", recovery_csv(rows));
  const double mean =
      scores.empty() ? 0.0 : std::accumulate(scores.begin(), scores.end(), 0.0) / scores.size();
  log.info("segments " + std::to_string(scores.size()) + ", mean s_seg " + fmt("%.4f", mean));
  return 0;
}

int cmd_synth(const fs::path &manifest, const fs::path &output_dir, const std::string &name,
              const fs::path &vocab_path, std::ostream &log_stream) {
  Logger log(log_stream, log_level_from_env());
  const Vocab vocab = vocab_or_default(vocab_path);
  const SynthSpec spec = load_manifest(manifest);
  const SynthResult syn = synth_posteriors(spec, vocab);
  const double fd = spec.frame_duration_s;

  std::string transcript, regions, truth = "utt_index\tstart_frame\tend_frame\tstart_s\tend_s\n";
  for (std::size_t i = 0; i < spec.utterances.size(); ++i) {
    const auto &u = spec.utterances[i];
    transcript += (u.transcript.empty() ? u.text : u.transcript) + '\n';
    regions += fmt("%.3f", u.start_s) + ' ' + fmt("%.3f", u.end_s) + '\n';
    const auto &g = syn.truth[i];
    truth += std::to_string(g.utt_index) + '\t' + std::to_string(g.start_frame) + '\t' +
             std::to_string(g.end_frame) + '\t' + fmt("%.3f", g.start_frame * fd) + '\t' +
             fmt("%.3f", (g.end_frame + 1) * fd) + '\n';
  }
  fs::create_directories(output_dir);
  const fs::path base = output_dir / name;
  fs::path ctcp = base;
  ctcp += ".ctcp";
  fs::path tmp = ctcp;
  tmp += ".tmp";
  write_posteriors_binary(tmp, syn.posteriors);
  fs::rename(tmp, ctcp);
  write_file_atomic(base.string() + ".txt", transcript);
  write_file_atomic(base.string() + ".regions", regions);
  write_file_atomic(base.string() + ".truth.tsv", truth);
  log.info("wrote " + std::to_string(spec.utterances.size()) + " utterances, " +
           std::to_string(syn.posteriors.frames()) + " frames to " + base.string() + ".*");
  return 0;
}

// ---------------------------------------------------------------------------
// Argument parsing

int run_cli(int argc, const char *const *argv, std::ostream &out, std::ostream &err) {
  CLI::App app{"Anchor-driven CTC alignment of long audio against loose transcripts"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every command");

  RunConfig cfg;
  std::string fragment_mean = "log";
  std::string config_path;
  auto *align = app.add_subcommand("align", "Align a corpus of posterior files with transcripts");
  align->add_option("--config", config_path, "Flat key = value file; flags override it");
  align->add_option("--posterior_dir,--posterior-dir", cfg.posterior_dir,
                    "Directory of .ctcp / .post files");
  align->add_option("--transcript_dir,--transcript-dir", cfg.transcript_dir,
                    "Directory of <file_id>.txt transcripts");
  align->add_option("--regions_dir,--regions-dir", cfg.regions_dir,
                    "Directory of <file_id>.regions speech regions");
  align->add_option("--vocab_path,--vocab-path,--vocab", cfg.vocab_path,
                    "Vocabulary file (default: built-in Spanish 38 symbols)");
  align->add_option("--output_dir,--output-dir,-o", cfg.output_dir, "Output directory");
  align->add_option("--output_formats,--output-formats", cfg.output_formats,
                    "Any of jsonl, ctm, segments")
      ->delimiter(',');
  align->add_option("--workers", cfg.workers, "Files aligned in parallel");
  align->add_option("--pass", cfg.pass, "Pass number stored in jsonl records");
  align->add_option("--max_gap_s,--max-gap-s", cfg.max_gap_s,
                    "Non-speech gaps longer than this are removed");
  align->add_option("--threshold", cfg.align.threshold, "Anchor acceptance threshold (log)");
  align->add_option("--window_s,--window-s", cfg.align.window_s, "Initial window (s)");
  align->add_option("--window_step_s,--window-step-s", cfg.align.window_step_s,
                    "Window growth step (s)");
  align->add_option("--max_window_s,--max-window-s", cfg.align.max_window_s,
                    "Largest window before skipping an utterance (s)");
  align->add_option("--max_utts_per_window,--max-utts-per-window", cfg.align.max_utts_per_window,
                    "Utterances tried per window");
  align->add_option("--fragment_frames,--fragment-frames", cfg.align.fragment_frames,
                    "Fragment length L (frames)");
  align->add_option("--reference_s,--reference-s", cfg.align.reference_s,
                    "Reference length U for normalized scores (s)");
  align->add_option("--short_penalty,--short-penalty", cfg.align.short_penalty,
                    "Score given to utterances of at most L frames");
  align->add_option("--fragment_mean,--fragment-mean", fragment_mean, "log or linear")
      ->check(CLI::IsMember({"log", "linear"}));
  align->add_flag("--stay_on_char,--stay-on-char", cfg.align.trellis.stay_on_char,
                  "Let stays on a character also consume its own probability");

  std::vector<std::string> filter_inputs;
  std::string filter_out = "filtered";
  std::string method = "absolute";
  double cutoff = std::nan("");
  FilterConfig fcfg;
  auto add_filter_opts = [&](CLI::App *cmd) {
    cmd->add_option("--method", method, "absolute, chebyshev or normalized")
        ->check(CLI::IsMember({"absolute", "chebyshev", "normalized"}));
    cmd->add_option("--cutoff", cutoff, "Cutoff for absolute (-1.0) or normalized (-1.5)");
    cmd->add_option("--fraction", fcfg.worst_fraction, "Chebyshev worst fraction");
    cmd->add_option("--reference_s,--reference-s", fcfg.reference_s, "Reference length U (s)");
  };
  auto *filter = app.add_subcommand("filter", "Filter alignment jsonl files by score");
  filter->add_option("inputs", filter_inputs, "jsonl files or align output directories")
      ->required();
  filter->add_option("--output_dir,--output-dir,-o", filter_out, "Output directory");
  add_filter_opts(filter);

  std::vector<std::string> stats_inputs;
  std::string stats_out = "stats";
  auto *stats = app.add_subcommand("stats", "Score histogram and data recovery tables");
  stats->add_option("inputs", stats_inputs, "name=path or path of align outputs");
  stats->add_option("--output_dir,--output-dir,-o", stats_out, "Output directory");
  add_filter_opts(stats);

  std::string manifest, synth_out, synth_name = "synth", synth_vocab;
  auto *synth = app.add_subcommand("synth", "Generate synthetic posteriors from a manifest");
  synth->add_option("manifest", manifest, "Manifest file")->required();
  synth->add_option("--output_dir,--output-dir,-o", synth_out, "Output directory")->required();
  synth->add_option("--name", synth_name, "Basename of the generated files");
  synth->add_option("--vocab_path,--vocab-path,--vocab", synth_vocab, "Vocabulary file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    return app.exit(e, out, err);
  }

  try {
    if (*align) {
      if (!config_path.empty()) {
        // Config values only fill options the command line left unset.
        std::istringstream in(read_file(config_path));
        std::string line;
        int lineno = 0;
        while (std::getline(in, line)) {
          ++lineno;
          const auto hash = line.find('#');
          if (hash != std::string::npos) line.erase(hash);
          if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
          const auto eq = line.find('=');
          auto trim = [](std::string s) {
            s.erase(0, s.find_first_not_of(" \t\r"));
            s.erase(s.find_last_not_of(" \t\r") + 1);
            return s;
          };
          if (eq == std::string::npos)
            throw std::invalid_argument(config_path + ":" + std::to_string(lineno) +
                                        ": expected key = value");
          const std::string key = trim(line.substr(0, eq));
          const std::string value = trim(line.substr(eq + 1));
          CLI::Option *opt = nullptr;
          try {
            opt = align->get_option("--" + key);
          } catch (const CLI::OptionNotFound &) {
            throw std::invalid_argument(config_path + ":" + std::to_string(lineno) +
                                        ": unknown key '" + key + "'");
          }
          if (opt->count() > 0) continue;
          if (opt->get_type_size() == 0) {
            if (value == "true" || value == "1") opt->add_result("true");
            else if (!(value == "false" || value == "0"))
              throw std::invalid_argument(config_path + ":" + std::to_string(lineno) +
                                          ": expected true or false for " + key);
          } else {
            opt->add_result(value);
          }
          opt->run_callback();
        }
      }
      cfg.align.fragment_mean =
          fragment_mean == "linear" ? FragmentMean::kLinear : FragmentMean::kLog;
      cfg.log_level = log_level_from_env();
      return cmd_align(cfg, err);
    }
    auto finish_filter = [&]() {
      fcfg.method = parse_filter_method(method);
      if (std::isnan(cutoff)) {
        fcfg.cutoff = fcfg.method == FilterMethod::kNormalized ? kNormalizedCutoff
                                                               : kAbsoluteCutoff;
      } else {
        fcfg.cutoff = cutoff;
      }
    };
    if (*filter) {
      finish_filter();
      std::vector<fs::path> paths(filter_inputs.begin(), filter_inputs.end());
      return cmd_filter(paths, fcfg, filter_out, err);
    }
    if (*stats) {
      finish_filter();
      return cmd_stats(stats_inputs, fcfg, stats_out, err);
    }
    if (*synth) return cmd_synth(manifest, synth_out, synth_name, synth_vocab, err);
  } catch (const std::exception &e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}

}  // namespace anchor_align
