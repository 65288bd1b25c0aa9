#ifndef NHRCH_ERRORS_HPP
#define NHRCH_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace nhrch {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DimensionMismatch : public Error {
public:
    using Error::Error;
};

class SingularMatrix : public Error {
public:
    SingularMatrix(const std::string& what, long rank, long size)
        : Error(what), rank_(rank), size_(size) {}
    long rank() const { return rank_; }
    long size() const { return size_; }

private:
    long rank_;
    long size_;
};

class RankError : public Error {
public:
    RankError(const std::string& what, long expected, long actual)
        : Error(what), expected_(expected), actual_(actual) {}
    long expected() const { return expected_; }
    long actual() const { return actual_; }

private:
    long expected_;
    long actual_;
};

// A hypothesis of an operation failed; carries the offending residual.
class PreconditionError : public Error {
public:
    PreconditionError(const std::string& check, double residual)
        : Error("precondition failed: " + check + " (residual " + std::to_string(residual) + ")"),
          check_(check), residual_(residual) {}
    const std::string& check() const { return check_; }
    double residual() const { return residual_; }

private:
    std::string check_;
    double residual_;
};

class EmptyLevelSet : public Error {
public:
    using Error::Error;
};

class Unsupported : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace nhrch

#endif
