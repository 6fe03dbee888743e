#pragma once

#include <stdexcept>
#include <string>

namespace shotit {

// Base class for everything shotit throws on purpose.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Input violates a precondition (bad image, bad dimensions, bad request).
class InvalidInput : public Error {
public:
    using Error::Error;
};

// A serialized form could not be decoded; message carries the location.
class ParseError : public Error {
public:
    using Error::Error;
};

// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
public:
    using Error::Error;
};

// Uniqueness violation (duplicate ids, duplicate store keys).
class ConflictError : public Error {
public:
    using Error::Error;
};

// Illegal media state transition; message names both states.
class TransitionError : public Error {
public:
    using Error::Error;
};

class NotFoundError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

// Stored data failed its checksum or structural validation.
class CorruptError : public Error {
public:
    using Error::Error;
};

// An external helper (clipper, decoder) failed; maps to a 502-class
// response on the HTTP surface.
class UpstreamError : public Error {
public:
    using Error::Error;
};

} // namespace shotit
