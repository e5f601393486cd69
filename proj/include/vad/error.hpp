#pragma once

#include <stdexcept>
#include <string>

namespace vad {

/// Broad failure classes; the CLI maps each to a process exit code.
enum class ErrorKind {
    InvalidInput,
    Config,
    Data,
    Numeric,
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

struct InvalidInput : Error {
    explicit InvalidInput(const std::string& what) : Error(ErrorKind::InvalidInput, what) {}
};

struct ConfigError : Error {
    explicit ConfigError(const std::string& what) : Error(ErrorKind::Config, what) {}
};

struct DataError : Error {
    explicit DataError(const std::string& what) : Error(ErrorKind::Data, what) {}
};

struct NumericError : Error {
    explicit NumericError(const std::string& what) : Error(ErrorKind::Numeric, what) {}
};

// 0 success, 2 config, 3 data, 4 numeric.
inline int exit_code_for(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::Config:
            return 2;
        case ErrorKind::InvalidInput:
        case ErrorKind::Data:
            return 3;
        case ErrorKind::Numeric:
            return 4;
    }
    return 1;
}

}  // namespace vad
