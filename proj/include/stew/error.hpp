// Copyright 2026 The Stew Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace stew {

enum class Errc {
  kMissingFile,
  kMalformedHeader,
  kUnsupportedEncoding,
  kInvalidArgument,
  kEmptyVocabulary,
  kUnknownWord,
  kWrongSampleRate,
  kDuplicateId,
  kUnknownId,
  kShapeMismatch,
  kConfigMismatch,
  kTruncatedFile,
  kNonFinite,
  kSizeGuard,
  kParse,
  kIo,
};

inline std::string_view errc_name(Errc code) {
  switch (code) {
    case Errc::kMissingFile: return "missing-file";
    case Errc::kMalformedHeader: return "malformed-header";
    case Errc::kUnsupportedEncoding: return "unsupported-encoding";
    case Errc::kInvalidArgument: return "invalid-argument";
    case Errc::kEmptyVocabulary: return "empty-vocabulary";
    case Errc::kUnknownWord: return "unknown-word";
    case Errc::kWrongSampleRate: return "wrong-sample-rate";
    case Errc::kDuplicateId: return "duplicate-id";
    case Errc::kUnknownId: return "unknown-id";
    case Errc::kShapeMismatch: return "shape-mismatch";
    case Errc::kConfigMismatch: return "config-mismatch";
    case Errc::kTruncatedFile: return "truncated-file";
    case Errc::kNonFinite: return "non-finite";
    case Errc::kSizeGuard: return "size-guard";
    case Errc::kParse: return "parse";
    case Errc::kIo: return "io";
  }
  return "unknown";
}

// Every failure in the library is reported as an Error carrying a code, so
// callers can branch on the kind without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(std::string(errc_name(code)) + ": " + message),
        code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& message) {
  throw Error(code, message);
}

inline void require(bool condition, Errc code, const std::string& message) {
  if (!condition) fail(code, message);
}

}  // namespace stew
