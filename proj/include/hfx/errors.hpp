#pragma once
#include <stdexcept>
#include <string>

namespace hfx {

// Error category maps 1:1 onto the CLI exit code.
enum class ErrorCategory : int { config = 2, parse = 3, compute = 4 };

class Error : public std::runtime_error {
public:
    Error(ErrorCategory cat, std::string code, const std::string& msg)
        : std::runtime_error(code + ": " + msg), cat_(cat), code_(std::move(code)) {}
    ErrorCategory category() const { return cat_; }
    const std::string& code() const { return code_; }
    int exit_code() const { return static_cast<int>(cat_); }

private:
    ErrorCategory cat_;
    std::string code_;
};

[[noreturn]] inline void throw_config(const std::string& code, const std::string& msg) {
    throw Error(ErrorCategory::config, code, msg);
}
[[noreturn]] inline void throw_parse(const std::string& code, const std::string& msg) {
    throw Error(ErrorCategory::parse, code, msg);
}
[[noreturn]] inline void throw_compute(const std::string& code, const std::string& msg) {
    throw Error(ErrorCategory::compute, code, msg);
}

} // namespace hfx
