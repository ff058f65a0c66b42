#pragma once

#include <optional>
#include <stdexcept>
#include <string>

namespace ragfuse {

/// Either a non-empty text answer or the distinguished Unknown outcome.
class Answer {
public:
    static Answer unknown() { return Answer(); }
    static Answer text(std::string value) {
        if (value.empty()) throw std::invalid_argument("text answer must be non-empty");
        Answer a;
        a.value_ = std::move(value);
        return a;
    }

    bool is_unknown() const noexcept { return !value_.has_value(); }
    const std::string& value() const { return value_.value(); }

    bool operator==(const Answer&) const = default;

private:
    Answer() = default;
    std::optional<std::string> value_;
};

}  // namespace ragfuse
