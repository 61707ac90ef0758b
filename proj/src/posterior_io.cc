// posterior_io.cc

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

#include "anchor_align/posterior_io.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "anchor_align/errors.h"
#include "anchor_align/utf8.h"

namespace anchor_align {

namespace {

std::string read_file(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

bool parse_int(std::string_view s, int *out) {
  if (s.empty()) return false;
  char *end = nullptr;
  std::string tmp(s);
  const long v = std::strtol(tmp.c_str(), &end, 10);
  if (end != tmp.c_str() + tmp.size()) return false;
  if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max())
    return false;
  *out = static_cast<int>(v);
  return true;
}

bool parse_double(const std::string &s, double *out) {
  if (s.empty()) return false;
  char *end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size()) return false;
  *out = v;
  return true;
}

std::vector<std::string> split_ws(const std::string &line) {
  std::vector<std::string> out;
  std::istringstream ss(line);
  std::string tok;
  while (ss >> tok) out.push_back(tok);
  return out;
}

void put_u32(std::string *buf, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) buf->push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::uint32_t get_u32(const unsigned char *p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) |
         (static_cast<std::uint32_t>(p[3]) << 24);
}

void put_f32(std::string *buf, float f) {
  std::uint32_t bits;
  std::memcpy(&bits, &f, sizeof bits);
  put_u32(buf, bits);
}

float get_f32(const unsigned char *p) {
  const std::uint32_t bits = get_u32(p);
  float f;
  std::memcpy(&f, &bits, sizeof f);
  return f;
}

double row_logsumexp(std::span<const double> row) {
  const double mx = *std::max_element(row.begin(), row.end());
  if (!std::isfinite(mx)) return mx;
  double sum = 0.0;
  for (double v : row) sum += std::exp(v - mx);
  return mx + std::log(sum);
}

PosteriorMatrix parse_binary(const std::string &bytes, const std::string &name,
                             std::uint64_t vocab_id) {
  constexpr std::size_t kHeader = 4 + 4 + 4 + 4 + 4;
  if (bytes.size() < kHeader) throw FormatError(name + ": truncated CTCP header");
  const auto *p = reinterpret_cast<const unsigned char *>(bytes.data());
  const std::uint32_t version = get_u32(p + 4);
  if (version != 1) throw FormatError(name + ": unsupported CTCP version " + std::to_string(version));
  const std::uint32_t frames = get_u32(p + 8);
  const std::uint32_t vocab = get_u32(p + 12);
  const float frame_duration = get_f32(p + 16);
  const std::size_t cells = static_cast<std::size_t>(frames) * vocab;
  if (bytes.size() != kHeader + 4 * cells)
    throw FormatError(name + ": CTCP payload size does not match T x V");
  std::vector<double> data(cells);
  for (std::size_t i = 0; i < cells; ++i) data[i] = get_f32(p + kHeader + 4 * i);
  return PosteriorMatrix(std::move(data), static_cast<int>(frames), static_cast<int>(vocab),
                         frame_duration, vocab_id);
}

PosteriorMatrix parse_text(const std::string &text, const std::string &name,
                           std::uint64_t vocab_id) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw FormatError(name + ": empty posterior file");
  const auto header = split_ws(line);
  int frames = 0, vocab = 0;
  double frame_duration = 0.0;
  if (header.size() != 3 || !parse_int(header[0], &frames) ||
      !parse_int(header[1], &vocab) || !parse_double(header[2], &frame_duration))
    throw FormatError(name + ": header must be 'T V frame_duration_s'");
  if (frames < 0 || vocab < 0) throw FormatError(name + ": negative dimensions");
  std::vector<double> data;
  data.reserve(static_cast<std::size_t>(frames) * vocab);
  int row = 0;
  while (std::getline(in, line)) {
    const auto toks = split_ws(line);
    if (toks.empty()) continue;
    if (row >= frames) throw FormatError(name + ": more than T rows");
    if (static_cast<int>(toks.size()) != vocab)
      throw FormatError(name + ": row " + std::to_string(row + 1) + " has " +
                        std::to_string(toks.size()) + " columns, expected " +
                        std::to_string(vocab));
    for (const auto &tok : toks) {
      double v;
      if (!parse_double(tok, &v))
        throw FormatError(name + ": bad number '" + tok + "' in row " + std::to_string(row + 1));
      data.push_back(v);
    }
    ++row;
  }
  if (row != frames) throw FormatError(name + ": fewer than T rows");
  return PosteriorMatrix(std::move(data), frames, vocab, frame_duration, vocab_id);
}

void write_bytes(const std::filesystem::path &path, const std::string &bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError("write failed for " + path.string());
}

}  // namespace

// ---------------------------------------------------------------------------
// Vocab

Vocab::Vocab(std::vector<std::string> symbols, int blank_index, int separator_index)
    : symbols_(std::move(symbols)), blank_(blank_index), separator_(separator_index) {
  const int v = size();
  if (blank_ < 0 || blank_ >= v) throw FormatError("vocab: blank index out of range");
  if (separator_ < 0 || separator_ >= v)
    throw FormatError("vocab: separator index out of range");
  if (blank_ == separator_) throw FormatError("vocab: blank and separator must differ");
  std::map<std::string, int> seen;
  std::string canonical;
  for (int i = 0; i < v; ++i) {
    const auto &sym = symbols_[i];
    if (sym.empty()) throw FormatError("vocab: empty symbol at index " + std::to_string(i));
    if (!seen.emplace(sym, i).second) throw FormatError("vocab: duplicate symbol '" + sym + "'");
    const auto cps = utf8::decode(sym);
    if (cps.size() == 1 && i != blank_) by_codepoint_.emplace(cps[0], i);
    canonical += std::to_string(i) + "\t" + sym + "\n";
  }
  canonical += "#blank " + std::to_string(blank_) + "\n#separator " + std::to_string(separator_) + "\n";
  checksum_ = fnv1a(canonical);
}

std::optional<int> Vocab::index_of(char32_t codepoint) const {
  auto it = by_codepoint_.find(codepoint);
  if (it == by_codepoint_.end()) return std::nullopt;
  return it->second;
}

Vocab parse_vocab(const std::string &text) {
  std::map<int, std::string> entries;
  std::optional<int> blank, separator;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::string where = "vocab line " + std::to_string(lineno);
    if (line[0] == '#') {
      const auto toks = split_ws(line);
      int idx;
      if (toks.size() == 2 && toks[0] == "#blank" && parse_int(toks[1], &idx)) {
        blank = idx;
      } else if (toks.size() == 2 && toks[0] == "#separator" && parse_int(toks[1], &idx)) {
        separator = idx;
      } else if (toks[0] == "#blank" || toks[0] == "#separator") {
        throw FormatError(where + ": malformed directive");
      }
      continue;  // comment
    }
    const auto tab = line.find('\t');
    int idx;
    if (tab == std::string::npos || !parse_int(std::string_view(line).substr(0, tab), &idx))
      throw FormatError(where + ": expected 'index<TAB>symbol'");
    if (!entries.emplace(idx, line.substr(tab + 1)).second)
      throw FormatError(where + ": duplicate index " + std::to_string(idx));
  }
  if (!blank) throw FormatError("vocab: missing '#blank' declaration");
  if (!separator) throw FormatError("vocab: missing '#separator' declaration");
  std::vector<std::string> symbols;
  int expect = 0;
  for (auto &[idx, sym] : entries) {
    if (idx != expect) throw FormatError("vocab: indices must be contiguous from 0");
    symbols.push_back(std::move(sym));
    ++expect;
  }
  if (!entries.count(*blank)) throw FormatError("vocab: blank index has no entry");
  if (symbols.size() < 2) throw FormatError("vocab: need at least 2 symbols");
  return Vocab(std::move(symbols), *blank, *separator);
}

Vocab load_vocab(const std::filesystem::path &path) { return parse_vocab(read_file(path)); }

// ---------------------------------------------------------------------------
// PosteriorMatrix

PosteriorMatrix::PosteriorMatrix(std::vector<double> data, int frames, int vocab_size,
                                 double frame_duration_s, std::uint64_t vocab_id)
    : data_(std::move(data)),
      frames_(frames),
      vocab_size_(vocab_size),
      frame_duration_s_(frame_duration_s),
      vocab_id_(vocab_id) {
  if (frames_ < 1) throw FormatError("posteriors: need T >= 1");
  if (vocab_size_ < 2) throw FormatError("posteriors: need V >= 2");
  if (!(frame_duration_s_ > 0.0)) throw FormatError("posteriors: frame duration must be > 0");
  if (data_.size() != static_cast<std::size_t>(frames_) * vocab_size_)
    throw FormatError("posteriors: data size does not match T x V");
  for (int t = 0; t < frames_; ++t) {
    const auto row = slice(t, 1).row(0);
    for (double v : row) {
      if (std::isnan(v)) throw FormatError("posteriors: NaN in frame " + std::to_string(t));
      if (v > 0.0)
        throw FormatError("posteriors: positive log-probability in frame " + std::to_string(t));
    }
    const double lse = row_logsumexp(row);
    if (!(std::fabs(lse) <= kRowNormTolerance))
      throw FormatError("posteriors: frame " + std::to_string(t) +
                        " is not normalized (logsumexp " + std::to_string(lse) + ")");
  }
}

PosteriorSlice PosteriorMatrix::slice(int start_frame, int num_frames) const {
  if (start_frame < 0 || num_frames < 0 || start_frame + num_frames > frames_)
    throw std::out_of_range("posterior slice outside matrix");
  return PosteriorSlice(data_.data() + static_cast<std::size_t>(start_frame) * vocab_size_,
                        num_frames, vocab_size_);
}

PosteriorMatrix load_posteriors(const std::filesystem::path &path, const Vocab &vocab) {
  const std::string bytes = read_file(path);
  const std::string name = path.string();
  PosteriorMatrix pm = (bytes.size() >= 4 && bytes.compare(0, 4, "CTCP") == 0)
                           ? parse_binary(bytes, name, vocab.checksum())
                           : parse_text(bytes, name, vocab.checksum());
  if (pm.vocab_size() != vocab.size())
    throw FormatError(name + ": " + std::to_string(pm.vocab_size()) +
                      " columns but vocab has " + std::to_string(vocab.size()) + " symbols");
  return pm;
}

void write_posteriors_binary(const std::filesystem::path &path, const PosteriorMatrix &pm) {
  std::string buf = "CTCP";
  put_u32(&buf, 1);
  put_u32(&buf, static_cast<std::uint32_t>(pm.frames()));
  put_u32(&buf, static_cast<std::uint32_t>(pm.vocab_size()));
  put_f32(&buf, static_cast<float>(pm.frame_duration_s()));
  buf.reserve(buf.size() + 4 * pm.data().size());
  for (double v : pm.data()) put_f32(&buf, static_cast<float>(v));
  write_bytes(path, buf);
}

void write_posteriors_text(const std::filesystem::path &path, const PosteriorMatrix &pm) {
  std::string out;
  char num[40];
  std::snprintf(num, sizeof num, "%.17g", pm.frame_duration_s());
  out += std::to_string(pm.frames()) + " " + std::to_string(pm.vocab_size()) + " " + num + "\n";
  for (int t = 0; t < pm.frames(); ++t) {
    for (int c = 0; c < pm.vocab_size(); ++c) {
      std::snprintf(num, sizeof num, "%.17g", pm.at(t, c));
      if (c) out += ' ';
      out += num;
    }
    out += '\n';
  }
  write_bytes(path, out);
}

// ---------------------------------------------------------------------------
// Speech regions and frame maps

SpeechRegions::SpeechRegions(std::vector<SpeechRegion> regions) : regions_(std::move(regions)) {
  for (std::size_t i = 0; i < regions_.size(); ++i) {
    const auto &r = regions_[i];
    if (!(r.end_s > r.start_s)) throw FormatError("speech region with end <= start");
    if (r.start_s < 0.0) throw FormatError("speech region starts before 0");
    if (i > 0 && !(r.start_s >= regions_[i - 1].end_s))
      throw FormatError("speech regions overlap or are out of order");
  }
}

SpeechRegions load_speech_regions(const std::filesystem::path &path) {
  std::istringstream in(read_file(path));
  std::string line;
  std::vector<SpeechRegion> regions;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto toks = split_ws(line);
    if (toks.empty() || toks[0][0] == '#') continue;
    SpeechRegion r{};
    if (toks.size() != 2 || !parse_double(toks[0], &r.start_s) || !parse_double(toks[1], &r.end_s))
      throw FormatError(path.string() + ":" + std::to_string(lineno) +
                        ": expected 'start_s end_s'");
    regions.push_back(r);
  }
  return SpeechRegions(std::move(regions));
}

FrameMap::FrameMap(std::vector<Segment> segments) : segments_(std::move(segments)) {
  int compressed = 0;
  int last_original_end = 0;
  for (const auto &s : segments_) {
    if (s.length <= 0) throw FormatError("frame map: empty segment");
    if (s.compressed_start != compressed) throw FormatError("frame map: segments not contiguous");
    if (s.original_start < last_original_end) throw FormatError("frame map: not monotone");
    compressed += s.length;
    last_original_end = s.original_start + s.length;
  }
}

FrameMap FrameMap::identity(int frames) {
  if (frames <= 0) return FrameMap{};
  return FrameMap({{0, 0, frames}});
}

int FrameMap::compressed_frames() const {
  if (segments_.empty()) return 0;
  return segments_.back().compressed_start + segments_.back().length;
}

bool FrameMap::is_identity() const {
  return segments_.size() == 1 && segments_[0].original_start == 0;
}

CompressedPosteriors apply_speech_regions(const PosteriorMatrix &pm, const SpeechRegions &sr,
                                          double max_gap_s) {
  const double fd = pm.frame_duration_s();
  const double total_s = pm.duration_s();
  constexpr double kEps = 1e-9;
  for (const auto &r : sr.regions())
    if (r.end_s > total_s + fd) throw FormatError("speech region beyond end of posteriors");

  // Non-speech gaps, including leading and trailing silence.
  std::vector<SpeechRegion> gaps;
  double cursor = 0.0;
  for (const auto &r : sr.regions()) {
    if (r.start_s > cursor) gaps.push_back({cursor, r.start_s});
    cursor = std::max(cursor, r.end_s);
  }
  if (cursor < total_s) gaps.push_back({cursor, total_s});

  std::vector<bool> keep(pm.frames(), true);
  for (const auto &g : gaps) {
    if (!(g.end_s - g.start_s > max_gap_s)) continue;
    // Only frames lying entirely inside the gap are removed.
    const int first = std::max(0, static_cast<int>(std::ceil(g.start_s / fd - kEps)));
    const int last = std::min(pm.frames(), static_cast<int>(std::floor(g.end_s / fd + kEps)));
    for (int t = first; t < last; ++t) keep[t] = false;
  }

  std::vector<FrameMap::Segment> segments;
  std::vector<double> data;
  int compressed = 0;
  for (int t = 0; t < pm.frames();) {
    if (!keep[t]) {
      ++t;
      continue;
    }
    int end = t;
    while (end < pm.frames() && keep[end]) ++end;
    segments.push_back({compressed, t, end - t});
    const auto *begin = pm.data().data() + static_cast<std::size_t>(t) * pm.vocab_size();
    data.insert(data.end(), begin, begin + static_cast<std::size_t>(end - t) * pm.vocab_size());
    compressed += end - t;
    t = end;
  }
  if (compressed == 0) throw NoSpeechError("no speech frames left after region compression");
  return {PosteriorMatrix(std::move(data), compressed, pm.vocab_size(), fd, pm.vocab_id()),
          FrameMap(std::move(segments))};
}

int map_frames_back(const FrameMap &fm, int compressed_frame) {
  const auto &segs = fm.segments();
  if (compressed_frame < 0 || compressed_frame >= fm.compressed_frames())
    throw std::out_of_range("frame " + std::to_string(compressed_frame) + " outside frame map");
  auto it = std::upper_bound(segs.begin(), segs.end(), compressed_frame,
                             [](int f, const FrameMap::Segment &s) { return f < s.compressed_start; });
  --it;
  return it->original_start + (compressed_frame - it->compressed_start);
}

}  // namespace anchor_align
