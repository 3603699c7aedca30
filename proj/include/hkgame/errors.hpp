#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace hkgame {

// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class SelfLoopError : public Error {
 public:
  explicit SelfLoopError(std::size_t agent)
      : Error("self-loop at agent " + std::to_string(agent)), agent_(agent) {}
  std::size_t agent() const { return agent_; }

 private:
  std::size_t agent_;
};

class DisconnectedError : public Error {
 public:
  using Error::Error;
};

class IndexError : public Error {
 public:
  using Error::Error;
};

// An agent was left without any neighbor after confidence filtering.
class EmptyNeighborhoodError : public Error {
 public:
  EmptyNeighborhoodError(std::size_t agent, double time)
      : Error("agent " + std::to_string(agent) +
              " has an empty neighborhood at t=" + std::to_string(time)),
        agent_(agent),
        time_(time) {}
  std::size_t agent() const { return agent_; }
  double time() const { return time_; }

 private:
  std::size_t agent_;
  double time_;
};

class NonFiniteError : public Error {
 public:
  using Error::Error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

// Raised when H (or its stubborn counterpart) is numerically singular, i.e.
// no unique open-loop Nash equilibrium exists for the parameters.
class SingularMatrixError : public Error {
 public:
  using Error::Error;
};

class GridTooCoarseError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  ConfigError(const std::string& field, const std::string& what)
      : Error(field + ": " + what), field_(field) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

class NoFeasibleEpsError : public Error {
 public:
  using Error::Error;
};

}  // namespace hkgame
