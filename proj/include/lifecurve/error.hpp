#pragma once

#include <stdexcept>
#include <string>

namespace lifecurve {

/// Error category, mapped to CLI exit codes.
enum class ErrorKind {
    Format,   // malformed input files
    Data,     // semantically invalid data (empty series, out-of-window events)
    Numeric   // optimization / numerical failure
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, std::string code, const std::string& message)
        : std::runtime_error(code + ": " + message),
          kind_(kind),
          code_(std::move(code)) {}

    ErrorKind kind() const noexcept { return kind_; }
    const std::string& code() const noexcept { return code_; }

private:
    ErrorKind kind_;
    std::string code_;
};

inline Error format_error(const std::string& code, const std::string& msg) {
    return Error(ErrorKind::Format, code, msg);
}
inline Error data_error(const std::string& code, const std::string& msg) {
    return Error(ErrorKind::Data, code, msg);
}
inline Error numeric_error(const std::string& code, const std::string& msg) {
    return Error(ErrorKind::Numeric, code, msg);
}

}  // namespace lifecurve
