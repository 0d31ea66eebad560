#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace rme {

enum class Label : std::uint8_t { Liked, Disliked };

// One line of an interaction log, ids kept as opaque strings.
struct RawEvent {
    std::string user;
    std::string item;
    double value = 0.0;
    std::int64_t timestamp = 0;
    bool has_timestamp = false;
};

// A binarized interaction on dense indices.
struct Cell {
    std::int32_t user = 0;
    std::int32_t item = 0;
    Label label = Label::Liked;
    std::int64_t timestamp = 0;
    bool has_timestamp = false;
};

enum class ErrorCategory {
    Io,
    Parse,
    Config,
    Data,
    Numeric,
    Invalid,
    Internal,
};

const char* error_category_name(ErrorCategory cat);

class Error : public std::runtime_error {
public:
    Error(ErrorCategory cat, const std::string& msg)
        : std::runtime_error(msg), cat_(cat) {}

    ErrorCategory category() const { return cat_; }

private:
    ErrorCategory cat_;
};

}  // namespace rme
