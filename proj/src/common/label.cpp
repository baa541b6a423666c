#include "pulsegauge/label.hpp"

#include "pulsegauge/error.hpp"

#include <string>

namespace pulsegauge {

std::string_view label_name(Label label)
{
    switch (label) {
    case Label::Positive:
        return "positive";
    case Label::Neutral:
        return "neutral";
    case Label::Negative:
        return "negative";
    }
    return "neutral";
}

Label parse_label(std::string_view name)
{
    std::string lower(name);
    for (char& c : lower)
        c = static_cast<char>(c >= 'A' && c <= 'Z' ? c + 32 : c);
    if (lower == "positive")
        return Label::Positive;
    if (lower == "neutral")
        return Label::Neutral;
    if (lower == "negative")
        return Label::Negative;
    throw Error(ErrorCode::InvalidInput, "unknown label '" + std::string(name) + "'");
}

} // namespace pulsegauge
