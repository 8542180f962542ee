// parrot/io.h

// Copyright 2026  Parrot Lab Authors
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

#ifndef PARROT_IO_H_
#define PARROT_IO_H_

#include <filesystem>
#include <string>

#include "json.hpp"

namespace parrot {

using Json = nlohmann::json;

/// Writes to `path.tmp` then renames over `path`.  Creates parent dirs.
void WriteFileAtomic(const std::filesystem::path &path,
                     const std::string &contents);

/// Throws DataError if the file is missing or unreadable.
std::string ReadFile(const std::filesystem::path &path);

Json LoadJson(const std::filesystem::path &path);
/// Pretty-printed with two-space indent and a trailing newline.
void SaveJson(const std::filesystem::path &path, const Json &j);

/// Resolves `p` relative to `base_dir` unless it is absolute.
std::filesystem::path ResolvePath(const std::filesystem::path &base_dir,
                                  const std::string &p);

}  // namespace parrot

#endif  // PARROT_IO_H_
