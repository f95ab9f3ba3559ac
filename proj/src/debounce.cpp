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
#include "maskpipe/debounce.hpp"

#include <cmath>
#include <string>

#include "maskpipe/errors.hpp"

namespace maskpipe {

std::string_view to_string(MaskLabel label) {
  switch (label) {
    case MaskLabel::Unconfirmed: return "Unconfirmed";
    case MaskLabel::Mask: return "Mask";
    case MaskLabel::NoMask: return "NoMask";
  }
  return "Unconfirmed";
}

DecisionEvent debounce_step(DebounceState& state, float p_mask, float p_nomask,
                            std::size_t frame_index) {
  if (!std::isfinite(p_mask) || !std::isfinite(p_nomask)) {
    throw InputError("frame " + std::to_string(frame_index) + ": non-finite class scores");
  }
  DecisionEvent event;
  event.frame_index = frame_index;
  event.p_mask = p_mask;
  event.p_nomask = p_nomask;

  if (p_mask < p_nomask) {
    if (state.fn_count < kCounterCap) ++state.fn_count;
    if (state.fn_count > kConfirmThreshold) {
      state.label = MaskLabel::NoMask;
      state.tn_count = 0;
    }
    event.alert = state.fn_count == kAlertCount;
  } else {
    if (state.tn_count < kCounterCap) ++state.tn_count;
    if (state.tn_count > kConfirmThreshold) {
      state.label = MaskLabel::Mask;
      state.fn_count = 0;
    }
  }
  event.label = state.label;
  return event;
}

}  // namespace maskpipe
