// Copyright 2026 The SM3 Optimizer Authors
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

#include "sm3/cover.h"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <sstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "sm3/error.h"

namespace sm3 {

void validate_cover(std::size_t d, const std::vector<IndexSet>& sets) {
  if (d == 0) {
    throw Error(ErrorCode::kInvalidConfig, "cover dimension must be >= 1");
  }
  if (sets.empty()) {
    throw Error(ErrorCode::kUncoveredIndex,
                "cover has no sets; index 0 is uncovered", 0);
  }
  std::vector<bool> covered(d, false);
  for (std::size_t r = 0; r < sets.size(); ++r) {
    if (sets[r].empty()) {
      throw Error(ErrorCode::kEmptySet, fmt::format("set {} is empty", r), r);
    }
    for (std::size_t i : sets[r]) {
      if (i >= d) {
        throw Error(ErrorCode::kIndexOutOfRange,
                    fmt::format("set {} contains index {} >= d = {}", r, i, d),
                    r);
      }
      covered[i] = true;
    }
  }
  for (std::size_t i = 0; i < d; ++i) {
    if (!covered[i]) {
      throw Error(ErrorCode::kUncoveredIndex,
                  fmt::format("index {} is not covered by any set", i), i);
    }
  }
}

GenericCover::GenericCover(std::size_t d, std::vector<IndexSet> sets)
    : d_(d), sets_(std::move(sets)) {
  validate_cover(d_, sets_);
  // Counting sort into CSR form. Repeated indices within a set count once.
  std::vector<std::size_t> counts(d_ + 1, 0);
  std::vector<std::size_t> last_seen(d_, sets_.size());
  for (std::size_t r = 0; r < sets_.size(); ++r) {
    for (std::size_t i : sets_[r]) {
      if (last_seen[i] == r) continue;
      last_seen[i] = r;
      ++counts[i + 1];
    }
  }
  std::partial_sum(counts.begin(), counts.end(), counts.begin());
  member_offsets_ = counts;
  member_sets_.resize(counts.back());
  std::fill(last_seen.begin(), last_seen.end(), sets_.size());
  for (std::size_t r = 0; r < sets_.size(); ++r) {
    for (std::size_t i : sets_[r]) {
      if (last_seen[i] == r) continue;
      last_seen[i] = r;
      member_sets_[counts[i]++] = r;
    }
  }
}

CoverStats GenericCover::stats() const {
  CoverStats s;
  s.k = sets_.size();
  for (const auto& set : sets_) s.edge_count += set.size();
  s.slots = s.k;
  return s;
}

AxisCover::AxisCover(Shape shape, std::vector<std::size_t> active_axes)
    : shape_(std::move(shape)), axes_(std::move(active_axes)) {
  if (axes_.empty()) {
    throw Error(ErrorCode::kEmptyAxes, "axis cover needs at least one axis");
  }
  for (std::size_t a : axes_) {
    if (a >= shape_.rank()) {
      throw Error(ErrorCode::kAxisOutOfRange,
                  fmt::format("axis {} out of range for shape {}", a,
                              shape_.to_string()),
                  a);
    }
  }
  std::sort(axes_.begin(), axes_.end());
  axes_.erase(std::unique(axes_.begin(), axes_.end()), axes_.end());
  offsets_.reserve(axes_.size());
  std::size_t offset = 0;
  for (std::size_t a : axes_) {
    offsets_.push_back(offset);
    offset += shape_.dim(a);
  }
}

std::size_t AxisCover::k() const {
  std::size_t k = 0;
  for (std::size_t a : axes_) k += shape_.dim(a);
  return k;
}

CoverStats AxisCover::stats() const {
  return CoverStats{k(), shape_.size() * axes_.size(), k()};
}

std::size_t cover_size(const Cover& cover) {
  return std::visit([](const auto& c) { return c.k(); }, cover);
}

std::size_t cover_dimension(const Cover& cover) {
  return std::visit([](const auto& c) { return c.d(); }, cover);
}

CoverStats cover_stats(const Cover& cover) {
  return std::visit([](const auto& c) { return c.stats(); }, cover);
}

GenericCover singleton_cover(std::size_t d) {
  std::vector<IndexSet> sets(d);
  for (std::size_t i = 0; i < d; ++i) sets[i] = {i};
  return GenericCover(d, std::move(sets));
}

AxisCover axis_cover(const Shape& shape,
                     std::vector<std::size_t> active_axes) {
  return AxisCover(shape, std::move(active_axes));
}

AxisCover full_axis_cover(const Shape& shape) {
  std::vector<std::size_t> axes(shape.rank());
  std::iota(axes.begin(), axes.end(), std::size_t{0});
  return AxisCover(shape, std::move(axes));
}

GenericCover expand(const AxisCover& cover) {
  const Shape& shape = cover.shape();
  std::vector<IndexSet> sets;
  sets.reserve(cover.k());
  for (std::size_t a : cover.active_axes()) {
    const std::size_t n = shape.dim(a);
    const std::size_t stride = shape.stride(a);
    std::vector<IndexSet> block(n);
    for (auto& s : block) s.reserve(shape.size() / n);
    for (std::size_t flat = 0; flat < shape.size(); ++flat) {
      block[(flat / stride) % n].push_back(flat);
    }
    for (auto& s : block) sets.push_back(std::move(s));
  }
  return GenericCover(shape.size(), std::move(sets));
}

GenericCover to_generic(const Cover& cover) {
  if (const auto* axis = std::get_if<AxisCover>(&cover)) return expand(*axis);
  return std::get<GenericCover>(cover);
}

std::string cover_to_json(const GenericCover& cover) {
  nlohmann::json j;
  j["d"] = cover.d();
  j["sets"] = cover.sets();
  return j.dump() + "\n";
}

GenericCover cover_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParse, fmt::format("cover JSON: {}", e.what()));
  }
  if (!j.is_object() || !j.contains("d") || !j.contains("sets") ||
      j.size() != 2) {
    throw Error(ErrorCode::kParse,
                "cover JSON must be an object with exactly \"d\" and \"sets\"");
  }
  try {
    const auto d = j.at("d").get<std::size_t>();
    auto sets = j.at("sets").get<std::vector<IndexSet>>();
    return GenericCover(d, std::move(sets));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParse, fmt::format("cover JSON: {}", e.what()));
  }
}

GenericCover load_cover_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open cover file " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return cover_from_json(buf.str());
}

void save_cover_file(const GenericCover& cover, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write cover file " + path);
  out << cover_to_json(cover);
}

}  // namespace sm3
