#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <variant>

namespace dean {

enum class ErrorCode {
    EmptyBlock,
    BadWeights,
    UnknownBlock,
    NoEligibleNode,
    AlreadyLocked,
    MissingParent,
    BadIdentity,
    FailedChallenge,
    NoEligibleNeighbor,
    NotRelocation,
    DuplicateSideBlock,
    BadSourceHash,
    NoSpace,
    BadAck,
    Unrecoverable,
    UnknownNode,
    EventStorm,
    BadConfig,
    BadFormat,
};

std::string_view errorName(ErrorCode code);

/// A protocol-level failure: a code from the closed set above plus free-form detail.
struct Failure {
    ErrorCode code;
    std::string detail;
};

class DeanError : public std::runtime_error {
public:
    DeanError(ErrorCode code, const std::string& detail)
        : std::runtime_error(std::string(errorName(code)) + ": " + detail), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

/// Value-or-failure for operations whose failures are ordinary protocol outcomes
/// (a lock already held, a rejected relocation) rather than programming errors.
template <class T>
class Expected {
public:
    Expected(T value) : v_(std::move(value)) {}
    Expected(Failure failure) : v_(std::move(failure)) {}

    bool ok() const noexcept { return std::holds_alternative<T>(v_); }
    explicit operator bool() const noexcept { return ok(); }

    T& value() & {
        throwIfFailed();
        return std::get<T>(v_);
    }
    const T& value() const& {
        throwIfFailed();
        return std::get<T>(v_);
    }
    T&& value() && {
        throwIfFailed();
        return std::get<T>(std::move(v_));
    }
    T* operator->() { return &value(); }
    const T* operator->() const { return &value(); }

    const Failure& failure() const { return std::get<Failure>(v_); }
    ErrorCode code() const { return failure().code; }

private:
    void throwIfFailed() const {
        if (!ok()) {
            const auto& f = std::get<Failure>(v_);
            throw DeanError(f.code, f.detail);
        }
    }

    std::variant<T, Failure> v_;
};

}  // namespace dean
