// Copyright 2026 The maskpipe Authors
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
#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>

namespace maskpipe {

enum class MaskLabel { Unconfirmed, Mask, NoMask };

std::string_view to_string(MaskLabel label);

/// A label is confirmed once its counter exceeds this value.
inline constexpr std::uint32_t kConfirmThreshold = 2;
/// The no-mask alert fires on the step where the no-mask counter equals this value.
inline constexpr std::uint32_t kAlertCount = 4;
/// Counters saturate here instead of overflowing.
inline constexpr std::uint32_t kCounterCap = 1'000'000;

/// Per-track temporal confirmation state.
///
/// fn_count grows on frames where the no-mask score wins and is cleared once
/// the mask label is confirmed; tn_count is the mirror image. Neither counter is
/// reset by a single opposing frame, so confirmation does not require strictly
/// consecutive frames.
struct DebounceState {
  std::uint32_t fn_count = 0;
  std::uint32_t tn_count = 0;
  MaskLabel label = MaskLabel::Unconfirmed;

  friend bool operator==(const DebounceState&, const DebounceState&) = default;
};

struct DecisionEvent {
  std::size_t frame_index = 0;
  MaskLabel label = MaskLabel::Unconfirmed;
  bool alert = false;
  float p_mask = 0.0f;
  float p_nomask = 0.0f;

  friend bool operator==(const DecisionEvent&, const DecisionEvent&) = default;
};

inline DebounceState debounce_new() { return {}; }

/// Advances the state by one frame. Ties take the mask branch.
/// Throws InputError (leaving the state untouched) on non-finite scores.
DecisionEvent debounce_step(DebounceState& state, float p_mask, float p_nomask,
                            std::size_t frame_index);

}  // namespace maskpipe
