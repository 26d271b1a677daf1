#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace finslerlab {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// bad user input: exit code 2
class InputError : public Error {
public:
    using Error::Error;
};

class SyntaxError : public InputError {
public:
    SyntaxError(std::size_t position, std::string expected)
        : InputError("syntax error at offset " + std::to_string(position) + ": expected " + expected),
          position_(position), expected_(std::move(expected)) {}
    std::size_t position() const noexcept { return position_; }
    const std::string& expected() const noexcept { return expected_; }

private:
    std::size_t position_;
    std::string expected_;
};

class UnknownIdentifier : public InputError {
public:
    explicit UnknownIdentifier(std::string name)
        : InputError("unknown identifier '" + name + "'"), name_(std::move(name)) {}
    const std::string& name() const noexcept { return name_; }

private:
    std::string name_;
};

class UnboundParameter : public InputError {
public:
    explicit UnboundParameter(const std::string& name) : InputError("unbound parameter '" + name + "'") {}
};

class ConstraintViolation : public InputError {
public:
    using InputError::InputError;
};

class MissingScalars : public InputError {
public:
    using InputError::InputError;
};

// numerical domain problems at a point: the sample is rejected
class DomainError : public Error {
public:
    using Error::Error;
};

class NotPositiveDefinite : public DomainError {
public:
    NotPositiveDefinite(double smallest, double largest)
        : DomainError("metric not positive definite: eigenvalues in [" + std::to_string(smallest) + ", " +
                      std::to_string(largest) + "]"),
          smallest_(smallest), largest_(largest) {}
    double smallest() const noexcept { return smallest_; }
    double largest() const noexcept { return largest_; }

private:
    double smallest_, largest_;
};

class ZeroDirection : public DomainError {
public:
    ZeroDirection() : DomainError("direction y is zero") {}
};

class DegenerateBeta : public DomainError {
public:
    DegenerateBeta() : DomainError("b^2 vanishes for a singular square metric") {}
};

class SingularFundamentalTensor : public DomainError {
public:
    explicit SingularFundamentalTensor(double cond)
        : DomainError("fundamental tensor is singular (condition " + std::to_string(cond) + ")") {}
};

class GuardViolation : public DomainError {
public:
    using DomainError::DomainError;
};

// the sampler could not find enough admissible points
class SamplingExhausted : public DomainError {
public:
    using DomainError::DomainError;
};

class RankDeficient : public Error {
public:
    RankDeficient(std::string what, double c) : Error(std::move(what)), c_(c) {}
    double c() const noexcept { return c_; }

private:
    double c_;
};

class HypothesisNotMet : public Error {
public:
    using Error::Error;
};

class GenerationFailed : public Error {
public:
    using Error::Error;
};

}
