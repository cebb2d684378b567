#pragma once

#include <stdexcept>
#include <string>

namespace vowelseg {

// Domain failures (too-short signals, inadmissible decodes, malformed
// files). Argument and index errors use std::invalid_argument and
// std::out_of_range.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class SignalTooShort : public Error {
public:
    SignalTooShort() : Error("signal too short") {}
};

class NoAdmissiblePair : public Error {
public:
    NoAdmissiblePair() : Error("utterance too short for constraints: no admissible pair") {}
};

class FormatError : public Error {
public:
    using Error::Error;
};

}  // namespace vowelseg
