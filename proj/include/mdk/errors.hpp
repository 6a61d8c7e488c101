#pragma once

#include <stdexcept>
#include <string>

namespace mdk {

/// Base class for all errors raised by this library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// --- container / file format ---

class BadMagic : public Error {
public:
    using Error::Error;
};

class Truncated : public Error {
public:
    using Error::Error;
};

class DimOverflow : public Error {
public:
    using Error::Error;
};

class BadDtype : public Error {
public:
    using Error::Error;
};

// --- manifest / configuration ---

class ManifestError : public Error {
public:
    using Error::Error;
};

class DuplicateId : public ManifestError {
public:
    using ManifestError::ManifestError;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

// --- numeric preconditions ---

class ShapeError : public Error {
public:
    using Error::Error;
};

class NonFiniteError : public Error {
public:
    using Error::Error;
};

class ConvergenceError : public Error {
public:
    using Error::Error;
};

// --- pipeline gates ---

/// Sequence shorter than the HODMD snapshot threshold.
class SequenceTooShort : public Error {
public:
    using Error::Error;
};

/// Automatic ROI detection found no bright region.
class EmptyRoi : public Error {
public:
    using Error::Error;
};

/// Input carries no signal where one is required (all-zero video, empty spectrum).
class DegenerateInput : public Error {
public:
    using Error::Error;
};

}  // namespace mdk
