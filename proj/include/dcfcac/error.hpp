#ifndef DCFCAC_ERROR_HPP
#define DCFCAC_ERROR_HPP

#include <stdexcept>
#include <string>

namespace dcfcac {

class Error : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// Bad user-supplied configuration (unknown preset, data rate, scheme...).
class ConfigError : public Error
{
public:
  using Error::Error;
};

class InvalidParameters : public Error
{
public:
  using Error::Error;
};

/// A numeric routine failed to reach its tolerance.
class NumericError : public Error
{
public:
  NumericError (const std::string &what, double residual)
    : Error (what + " (residual " + std::to_string (residual) + ")"),
      m_residual (residual)
  {
  }
  double residual () const { return m_residual; }

private:
  double m_residual;
};

/// Bug trap: an internal invariant did not hold.
class InternalError : public Error
{
public:
  using Error::Error;
};

class RegistryError : public Error
{
public:
  using Error::Error;
};

class OrderingError : public Error
{
public:
  using Error::Error;
};

class IoError : public Error
{
public:
  using Error::Error;
};

} // namespace dcfcac

#endif
