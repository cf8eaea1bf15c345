#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace promptforge {

// Base for every error raised by the library. The CLI maps ValidationError to
// exit code 1 and everything else to exit code 2.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

class LengthError : public Error {
  public:
    using Error::Error;
};

class VocabError : public Error {
  public:
    using Error::Error;
};

class IndexError : public Error {
  public:
    using Error::Error;
};

class ArgumentError : public Error {
  public:
    using Error::Error;
};

class TrainingError : public Error {
  public:
    TrainingError(std::size_t epoch, const std::string &what)
        : Error("training diverged at epoch " + std::to_string(epoch) + ": " + what), epoch_(epoch) {}

    std::size_t epoch() const { return epoch_; }

  private:
    std::size_t epoch_;
};

class FormatError : public Error {
  public:
    enum class Kind { BadMagic, VersionMismatch, Truncated, Checksum, Malformed };

    FormatError(Kind kind, const std::string &what) : Error(what), kind_(kind) {}

    Kind kind() const { return kind_; }

  private:
    Kind kind_;
};

class ParseError : public Error {
  public:
    ParseError(std::size_t line, const std::string &what)
        : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const { return line_; }

  private:
    std::size_t line_;
};

class ValidationError : public Error {
  public:
    using Error::Error;
};

class IoError : public Error {
  public:
    using Error::Error;
};

} // namespace promptforge
