// anchor_align/posterior_io.h

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

#ifndef ANCHOR_ALIGN_POSTERIOR_IO_H_
#define ANCHOR_ALIGN_POSTERIOR_IO_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace anchor_align {

// Character inventory of the acoustic model. Entries are indexed 0..V-1.
class Vocab {
 public:
  Vocab() = default;
  // Validates the invariants and throws FormatError on violation.
  Vocab(std::vector<std::string> symbols, int blank_index, int separator_index);

  int size() const { return static_cast<int>(symbols_.size()); }
  int blank_index() const { return blank_; }
  int separator_index() const { return separator_; }
  const std::string &symbol(int index) const { return symbols_.at(index); }
  const std::vector<std::string> &symbols() const { return symbols_; }

  // Index of a single-codepoint symbol, or nullopt.
  std::optional<int> index_of(char32_t codepoint) const;
  // FNV-1a over the canonical file rendering; binds posteriors to a vocab.
  std::uint64_t checksum() const { return checksum_; }

 private:
  std::vector<std::string> symbols_;
  std::unordered_map<char32_t, int> by_codepoint_;
  int blank_ = -1;
  int separator_ = -1;
  std::uint64_t checksum_ = 0;
};

Vocab parse_vocab(const std::string &text);
Vocab load_vocab(const std::filesystem::path &path);

// Read-only view over a contiguous run of frames.
class PosteriorSlice {
 public:
  PosteriorSlice(const double *data, int frames, int vocab_size)
      : data_(data), frames_(frames), vocab_size_(vocab_size) {}

  int frames() const { return frames_; }
  int vocab_size() const { return vocab_size_; }
  std::span<const double> row(int t) const {
    return {data_ + static_cast<std::size_t>(t) * vocab_size_,
            static_cast<std::size_t>(vocab_size_)};
  }
  double at(int t, int c) const {
    return data_[static_cast<std::size_t>(t) * vocab_size_ + c];
  }

 private:
  const double *data_;
  int frames_;
  int vocab_size_;
};

// T x V natural-log frame posteriors. Immutable after construction.
class PosteriorMatrix {
 public:
  PosteriorMatrix() = default;
  // Checks cells (<= 0, no NaN) and row normalization; throws FormatError.
  PosteriorMatrix(std::vector<double> data, int frames, int vocab_size,
                  double frame_duration_s, std::uint64_t vocab_id = 0);

  int frames() const { return frames_; }
  int vocab_size() const { return vocab_size_; }
  double frame_duration_s() const { return frame_duration_s_; }
  std::uint64_t vocab_id() const { return vocab_id_; }
  double duration_s() const { return frames_ * frame_duration_s_; }
  const std::vector<double> &data() const { return data_; }

  double at(int t, int c) const {
    return data_[static_cast<std::size_t>(t) * vocab_size_ + c];
  }
  PosteriorSlice slice(int start_frame, int num_frames) const;
  PosteriorSlice all() const { return slice(0, frames_); }

 private:
  std::vector<double> data_;
  int frames_ = 0;
  int vocab_size_ = 0;
  double frame_duration_s_ = 0.0;
  std::uint64_t vocab_id_ = 0;
};

// Row logsumexp must lie within this distance of 0.
inline constexpr double kRowNormTolerance = 0.1;

PosteriorMatrix load_posteriors(const std::filesystem::path &path,
                                const Vocab &vocab);
// Binary "CTCP v1": cells are stored as little-endian float32.
void write_posteriors_binary(const std::filesystem::path &path,
                             const PosteriorMatrix &pm);
void write_posteriors_text(const std::filesystem::path &path,
                           const PosteriorMatrix &pm);

struct SpeechRegion {
  double start_s;
  double end_s;
};

class SpeechRegions {
 public:
  SpeechRegions() = default;
  explicit SpeechRegions(std::vector<SpeechRegion> regions);
  const std::vector<SpeechRegion> &regions() const { return regions_; }
  bool empty() const { return regions_.empty(); }

 private:
  std::vector<SpeechRegion> regions_;
};

SpeechRegions load_speech_regions(const std::filesystem::path &path);

// Piecewise mapping from a compressed timeline back to original frames.
class FrameMap {
 public:
  struct Segment {
    int compressed_start;
    int original_start;
    int length;
  };

  FrameMap() = default;
  explicit FrameMap(std::vector<Segment> segments);
  static FrameMap identity(int frames);

  const std::vector<Segment> &segments() const { return segments_; }
  int compressed_frames() const;
  bool is_identity() const;

 private:
  std::vector<Segment> segments_;
};

struct CompressedPosteriors {
  PosteriorMatrix posteriors;
  FrameMap frame_map;
};

// Drops frames lying inside non-speech gaps longer than max_gap_s (leading
// and trailing non-speech included). Throws NoSpeechError if nothing is left.
CompressedPosteriors apply_speech_regions(const PosteriorMatrix &pm,
                                          const SpeechRegions &regions,
                                          double max_gap_s = 30.0);

int map_frames_back(const FrameMap &fm, int compressed_frame);

}  // namespace anchor_align

#endif  // ANCHOR_ALIGN_POSTERIOR_IO_H_
