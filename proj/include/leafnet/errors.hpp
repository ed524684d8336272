#pragma once

#include <stdexcept>
#include <string>

namespace leafnet {

/// Base for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Tensor shapes that do not fit together.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// NaN/Inf encountered where finite values are required.
class NumericError : public Error {
public:
    using Error::Error;
};

/// An argument outside its documented range.
class ParameterError : public Error {
public:
    using Error::Error;
};

/// Missing or malformed dataset directory layout.
class StructuralError : public Error {
public:
    using Error::Error;
};

class DecodeError : public Error {
public:
    DecodeError(std::string path, const std::string& what)
        : Error(path + ": " + what), path_(std::move(path)) {}

    const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
};

/// Corrupt or incompatible model file. Carries the byte offset of the fault.
class FormatError : public Error {
public:
    FormatError(std::size_t offset, const std::string& what)
        : Error("model file offset " + std::to_string(offset) + ": " + what), offset_(offset) {}

    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

/// Operation invoked on an object that is not ready for it.
class StateError : public Error {
public:
    using Error::Error;
};

}  // namespace leafnet
