// Copyright 2026 The TDP Authors. All rights reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef TDP_SRC_IO_UTIL_H_
#define TDP_SRC_IO_UTIL_H_

#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"
#include "tdp/errors.h"

namespace tdp::internal {

inline std::string ReadText(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline nlohmann::json ParseJson(const std::string& text,
                                const std::string& what) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(what + ": " + e.what(), e.byte);
  }
}

inline nlohmann::json ReadJson(const std::string& path) {
  return ParseJson(ReadText(path), path);
}

}  // namespace tdp::internal

#endif  // TDP_SRC_IO_UTIL_H_
