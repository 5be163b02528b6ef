/*
 * Copyright 2026 The pcam Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#ifndef PCAM_ERRORS_HPP
#define PCAM_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace pcam {

// Problems with user-supplied data: files, CSV cells, schema mismatches.
struct DataError : std::runtime_error {
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

// Malformed or incompatible model documents.
struct ModelFormatError : std::runtime_error {
  explicit ModelFormatError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace pcam

#endif  // PCAM_ERRORS_HPP
