// Error taxonomy shared by the library and the CLI.
//
// The CLI maps these onto process exit codes, so every throw site should pick
// the category by *who* has to act: the caller fed bad data (DomainError), a
// certified inequality failed to hold (CheckError), or a configured budget ran
// out before an answer was reached (ResourceError).
#pragma once

#include <stdexcept>
#include <string>

namespace ietnue {

/// Invalid input: malformed permutation, non-positive length, bad config file.
class DomainError : public std::runtime_error {
public:
    explicit DomainError(const std::string& what) : std::runtime_error(what) {}
};

/// A verification predicate that the library promises to certify came out
/// false (or is undefined, e.g. an induction step at a tie).
class CheckError : public std::runtime_error {
public:
    explicit CheckError(const std::string& what) : std::runtime_error(what) {}
};

/// The induction step is undefined because the two critical lengths are equal.
/// A subtype of CheckError: callers that certify orbits treat it as a failed
/// certification, not as bad input.
class RauzyUndefinedError : public CheckError {
public:
    explicit RauzyUndefinedError(const std::string& what) : CheckError(what) {}
};

/// An iteration/bit-size/sample budget was exhausted before completion.
class ResourceError : public std::runtime_error {
public:
    explicit ResourceError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace ietnue
