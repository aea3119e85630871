#pragma once

#include <stdexcept>
#include <string>

namespace censaft {

class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Input and parsing
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line)
        : Error(what + " (line " + std::to_string(line) + ")"), line_(line) {}
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

class InvalidDataset : public Error {
public:
    using Error::Error;
};

// Quadratic programming
class NotPositiveDefinite : public Error {
public:
    using Error::Error;
};

class Infeasible : public Error {
public:
    using Error::Error;
};

// Weighted least squares
class AllWeightsZero : public Error {
public:
    using Error::Error;
};

class RankDeficient : public Error {
public:
    using Error::Error;
};

class NoUncensored : public Error {
public:
    using Error::Error;
};

class NonPositiveZ : public Error {
public:
    using Error::Error;
};

// Buckley-James iteration
class SingularDesign : public Error {
public:
    using Error::Error;
};

// Imputation
class NoTailMass : public Error {
public:
    using Error::Error;
};

class TooFewCensored : public Error {
public:
    using Error::Error;
};

class DegenerateRegression : public Error {
public:
    using Error::Error;
};

class LargestNotCensored : public Error {
public:
    using Error::Error;
};

class DegenerateCurve : public Error {
public:
    using Error::Error;
};

// Simulation
class CalibrationFailed : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    ConfigError(const std::string& what, const std::string& field)
        : Error(what + " (field: " + field + ")"), field_(field) {}
    const std::string& field() const { return field_; }

private:
    std::string field_;
};

}  // namespace censaft
