#pragma once

#include <array>
#include <string_view>

namespace pulsegauge {

// Declaration order is the confusion-matrix order.
enum class Label { Positive = 0, Neutral = 1, Negative = 2 };

inline constexpr std::array<Label, 3> kAllLabels = {Label::Positive, Label::Neutral, Label::Negative};

std::string_view label_name(Label label);
// "positive" / "negative" / "neutral" (case-insensitive); throws InvalidInput.
Label parse_label(std::string_view name);

} // namespace pulsegauge
