// anchor_align/errors.h

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

#ifndef ANCHOR_ALIGN_ERRORS_H_
#define ANCHOR_ALIGN_ERRORS_H_

#include <stdexcept>
#include <string>

namespace anchor_align {

/// Malformed input file, or data violating a type invariant.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Speech-region compression removed every frame.
class NoSpeechError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Text normalized to nothing under the vocabulary.
class EmptyTextError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The trellis has no finite path: the window is too short for the text.
class NoPathError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace anchor_align

#endif  // ANCHOR_ALIGN_ERRORS_H_
