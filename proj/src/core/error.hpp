#pragma once

#include <stdexcept>
#include <string>

namespace lumen {

// Every failure raised by the core derives from Error; the C API maps the
// subclass onto a status code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class OutOfBoundsError : public Error {
 public:
  OutOfBoundsError(const std::string& msg, double lon, double lat)
      : Error(msg), lon_(lon), lat_(lat) {}
  double lon() const { return lon_; }
  double lat() const { return lat_; }

 private:
  double lon_;
  double lat_;
};

class NotFoundError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class StaleError : public Error {
 public:
  using Error::Error;
};

class LockedError : public Error {
 public:
  using Error::Error;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace lumen
