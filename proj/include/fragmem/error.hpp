#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace fragmem {

enum class ErrorKind {
    EmptyContext,
    Config,
    Dimension,
    ZeroNorm,
    ProviderContract,
    RetryableProvider,
    NodeNotFound,
    FragmentUnmapped,
    MatrixContract,
    Generator,
    Input,
    IndexFormat,
};

const char* to_string(ErrorKind kind);

/// Base of every error the library raises. `kind()` lets callers (the CLI in
/// particular) map failures to exit codes without a dynamic_cast ladder.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

class EmptyContextError : public Error {
public:
    explicit EmptyContextError(const std::string& what) : Error(ErrorKind::EmptyContext, what) {}
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what) : Error(ErrorKind::Config, what) {}
};

class DimensionError : public Error {
public:
    explicit DimensionError(const std::string& what) : Error(ErrorKind::Dimension, what) {}
};

class ZeroNormError : public Error {
public:
    explicit ZeroNormError(const std::string& what) : Error(ErrorKind::ZeroNorm, what) {}
};

class ProviderContractError : public Error {
public:
    explicit ProviderContractError(const std::string& what) : Error(ErrorKind::ProviderContract, what) {}
};

class RetryableProviderError : public Error {
public:
    RetryableProviderError(const std::string& what, int attempts)
        : Error(ErrorKind::RetryableProvider, what + " (after " + std::to_string(attempts) + " attempts)"),
          attempts_(attempts) {}
    int attempts() const noexcept { return attempts_; }

private:
    int attempts_;
};

class NodeNotFoundError : public Error {
public:
    explicit NodeNotFoundError(const std::string& what) : Error(ErrorKind::NodeNotFound, what) {}
};

class FragmentUnmappedError : public Error {
public:
    explicit FragmentUnmappedError(const std::string& what) : Error(ErrorKind::FragmentUnmapped, what) {}
};

class MatrixContractError : public Error {
public:
    explicit MatrixContractError(const std::string& what) : Error(ErrorKind::MatrixContract, what) {}
};

class GeneratorError : public Error {
public:
    explicit GeneratorError(const std::string& what) : Error(ErrorKind::Generator, what) {}
};

class InputError : public Error {
public:
    explicit InputError(const std::string& what) : Error(ErrorKind::Input, what) {}
};

class IndexFormatError : public Error {
public:
    explicit IndexFormatError(const std::string& what) : Error(ErrorKind::IndexFormat, what) {}
};

} // namespace fragmem
