#pragma once

#include <stdexcept>
#include <string>

namespace fso {

/// Base of every error raised by the library. Carries the CLI exit code the
/// error maps to when it escapes a command.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what, int exit_code = 4)
        : std::runtime_error(what), exit_code_(exit_code) {}
    int exit_code() const noexcept { return exit_code_; }

private:
    int exit_code_;
};

class ParameterError : public Error {
public:
    explicit ParameterError(const std::string& what) : Error("parameter error: " + what) {}
};

class DimensionError : public Error {
public:
    explicit DimensionError(const std::string& what) : Error("dimension error: " + what) {}
};

class InvalidFieldError : public Error {
public:
    explicit InvalidFieldError(const std::string& what) : Error("invalid field: " + what) {}
};

class SamplingError : public Error {
public:
    explicit SamplingError(const std::string& what) : Error("sampling error: " + what) {}
};

class UndefinedEfficiencyError : public Error {
public:
    explicit UndefinedEfficiencyError(const std::string& what)
        : Error("undefined efficiency: " + what) {}
};

class ControllerFault : public Error {
public:
    explicit ControllerFault(const std::string& what) : Error("controller fault: " + what) {}
};

class ScanRangeError : public Error {
public:
    explicit ScanRangeError(const std::string& what) : Error("scan range error: " + what) {}
};

/// Raised by power_penalty when a curve never crosses the target BER.
class NotComparableError : public Error {
public:
    NotComparableError(const std::string& side, const std::string& what)
        : Error("not comparable (" + side + "): " + what), side_(side) {}
    const std::string& side() const noexcept { return side_; }

private:
    std::string side_;
};

class ConfigError : public Error {
public:
    ConfigError(const std::string& path, const std::string& what)
        : Error("config error at '" + path + "': " + what, 2), path_(path) {}
    const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
};

class MissingArtifactError : public Error {
public:
    explicit MissingArtifactError(const std::string& what)
        : Error("missing artifact: " + what, 3) {}
};

class NumericalContractError : public Error {
public:
    explicit NumericalContractError(const std::string& what)
        : Error("numerical contract violation: " + what, 4) {}
};

}  // namespace fso
