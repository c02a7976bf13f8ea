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

#ifndef SM3_COVER_H_
#define SM3_COVER_H_

#include <cstddef>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "sm3/tensor.h"

namespace sm3 {

using IndexSet = std::vector<std::size_t>;

struct CoverStats {
  std::size_t k = 0;           // number of sets
  std::size_t edge_count = 0;  // sum of |S_r|, the per-step work
  std::size_t slots = 0;       // accumulator scalars (one per set)
};

// Throws sm3::Error with kIndexOutOfRange, kEmptySet or kUncoveredIndex
// (index() names the offending set or parameter) unless `sets` is a cover
// of {0, ..., d-1}. Duplicate sets are allowed.
void validate_cover(std::size_t d, const std::vector<IndexSet>& sets);

// Explicit collection of k nonempty, possibly overlapping index sets whose
// union is {0, ..., d-1}. Also stores the inverse (parameter -> sets) view so
// the per-parameter min runs over a contiguous list.
class GenericCover {
 public:
  GenericCover(std::size_t d, std::vector<IndexSet> sets);

  std::size_t d() const { return d_; }
  std::size_t k() const { return sets_.size(); }
  const std::vector<IndexSet>& sets() const { return sets_; }
  const IndexSet& set(std::size_t r) const { return sets_[r]; }

  // Sets containing parameter i, in increasing order of r. Never empty.
  std::span<const std::size_t> memberships(std::size_t i) const {
    return {member_sets_.data() + member_offsets_[i],
            member_offsets_[i + 1] - member_offsets_[i]};
  }

  CoverStats stats() const;

  friend bool operator==(const GenericCover& a, const GenericCover& b) {
    return a.d_ == b.d_ && a.sets_ == b.sets_;
  }

 private:
  std::size_t d_;
  std::vector<IndexSet> sets_;
  std::vector<std::size_t> member_offsets_;
  std::vector<std::size_t> member_sets_;
};

// Co-dimension-1 slices of a tensor along each active axis. Accumulators
// are laid out axis by axis in the order of `active_axes()`, each block
// indexed by the coordinate along that axis.
class AxisCover {
 public:
  AxisCover(Shape shape, std::vector<std::size_t> active_axes);

  const Shape& shape() const { return shape_; }
  const std::vector<std::size_t>& active_axes() const { return axes_; }
  std::size_t d() const { return shape_.size(); }
  std::size_t k() const;
  // Offset of the accumulator block for active_axes()[j].
  std::size_t block_offset(std::size_t j) const { return offsets_[j]; }

  CoverStats stats() const;

  friend bool operator==(const AxisCover& a, const AxisCover& b) {
    return a.shape_ == b.shape_ && a.axes_ == b.axes_;
  }

 private:
  Shape shape_;
  std::vector<std::size_t> axes_;
  std::vector<std::size_t> offsets_;
};

using Cover = std::variant<GenericCover, AxisCover>;

std::size_t cover_size(const Cover& cover);  // k
std::size_t cover_dimension(const Cover& cover);  // d
CoverStats cover_stats(const Cover& cover);

GenericCover singleton_cover(std::size_t d);

// Throws kEmptyAxes or kAxisOutOfRange. Duplicate axes are collapsed.
AxisCover axis_cover(const Shape& shape, std::vector<std::size_t> active_axes);
AxisCover full_axis_cover(const Shape& shape);

// Explicit form of an axis cover: for each active axis in order, one set per
// coordinate holding the row-major flat indices of that slice, ascending.
GenericCover expand(const AxisCover& cover);
GenericCover to_generic(const Cover& cover);

// JSON text {"d": int, "sets": [[int, ...], ...]} with 0-based indices.
std::string cover_to_json(const GenericCover& cover);
GenericCover cover_from_json(const std::string& text);
GenericCover load_cover_file(const std::string& path);
void save_cover_file(const GenericCover& cover, const std::string& path);

}  // namespace sm3

#endif  // SM3_COVER_H_
