#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace taserial {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised while evaluating a term or formula.
class EvalError : public Error {
public:
    enum class Kind { unbound_variable, arity_mismatch, type_mismatch, overflow, unknown_rule };

    EvalError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}

    [[nodiscard]] Kind kind() const noexcept { return kind_; }

private:
    Kind kind_;
};

class InconsistentUpdateSet : public Error {
public:
    explicit InconsistentUpdateSet(std::vector<std::string> clashes)
        : Error(describe("inconsistent update set", clashes)), clashes_(std::move(clashes)) {}

    InconsistentUpdateSet(const std::string& prefix, std::vector<std::string> clashes)
        : Error(describe(prefix, clashes)), clashes_(std::move(clashes)) {}

    [[nodiscard]] const std::vector<std::string>& clashes() const noexcept { return clashes_; }

private:
    static std::string describe(const std::string& prefix, const std::vector<std::string>& clashes) {
        std::string out = prefix + ":";
        for (const auto& c : clashes) out += " " + c;
        return out;
    }

    std::vector<std::string> clashes_;
};

/// The union of all agent update sets in one global step clashed. This is a
/// controller invariant violation, never a property of the machine programs.
class InconsistentGlobalUpdate : public InconsistentUpdateSet {
public:
    explicit InconsistentGlobalUpdate(std::vector<std::string> clashes)
        : InconsistentUpdateSet("inconsistent global update", std::move(clashes)) {}
};

class IllegalControlState : public Error {
public:
    using Error::Error;
};

class EmptyHistory : public Error {
public:
    using Error::Error;
};

class InvariantViolation : public Error {
public:
    using Error::Error;
};

class MalformedTrace : public Error {
public:
    using Error::Error;
};

class ConfigMismatch : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class UncommittedMachine : public Error {
public:
    using Error::Error;
};

class TooManyMachines : public Error {
public:
    using Error::Error;
};

class UnknownMachine : public Error {
public:
    using Error::Error;
};

class ParseError : public Error {
public:
    ParseError(const std::string& message, std::size_t line, std::size_t column)
        : Error(std::to_string(line) + ":" + std::to_string(column) + ": " + message),
          line_(line),
          column_(column) {}

    [[nodiscard]] std::size_t line() const noexcept { return line_; }
    [[nodiscard]] std::size_t column() const noexcept { return column_; }

private:
    std::size_t line_;
    std::size_t column_;
};

class ArityError : public ParseError {
public:
    using ParseError::ParseError;
};

class UnknownIdentifier : public ParseError {
public:
    using ParseError::ParseError;
};

} // namespace taserial
