#pragma once

#include <stdexcept>
#include <string>

namespace mpaudit {

/// Error categories map one-to-one onto CLI exit codes (2, 3, 4).
enum class ErrorKind { config, data, runtime };

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

inline Error config_error(const std::string& what) { return Error(ErrorKind::config, what); }
inline Error data_error(const std::string& what) { return Error(ErrorKind::data, what); }
inline Error runtime_error(const std::string& what) { return Error(ErrorKind::runtime, what); }

inline int exit_code(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::config: return 2;
        case ErrorKind::data: return 3;
        case ErrorKind::runtime: return 4;
    }
    return 4;
}

}  // namespace mpaudit
