#pragma once

#include <stdexcept>
#include <string>

namespace semicl {

enum class ErrorKind { parse, validation, instability };

/// Library error; `code` is a short machine-readable token.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, std::string code, const std::string& what)
        : std::runtime_error(what), kind_(kind), code_(std::move(code)) {}

    ErrorKind kind() const noexcept { return kind_; }
    const std::string& code() const noexcept { return code_; }

private:
    ErrorKind kind_;
    std::string code_;
};

[[noreturn]] inline void fail_validation(const std::string& code, const std::string& what) {
    throw Error(ErrorKind::validation, code, what);
}

[[noreturn]] inline void fail_instability(const std::string& code, const std::string& what) {
    throw Error(ErrorKind::instability, code, what);
}

[[noreturn]] inline void fail_parse(const std::string& code, const std::string& what) {
    throw Error(ErrorKind::parse, code, what);
}

}  // namespace semicl
