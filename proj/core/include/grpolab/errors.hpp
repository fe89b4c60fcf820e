#pragma once

#include <stdexcept>
#include <string>

namespace grpolab {

// Error taxonomy shared by the library and the CLI. Every category maps to a
// stable machine-readable name and a distinct process exit code.
class Error : public std::runtime_error {
public:
  enum class Category {
    ConfigParse,
    ConfigValidation,
    InvalidInput,
    Numeric,
    Io,
    Internal,
  };

  Error(Category category, std::string message)
      : std::runtime_error(std::move(message)), category_(category) {}

  Category category() const { return category_; }

  const char* category_name() const {
    switch (category_) {
      case Category::ConfigParse: return "config_parse";
      case Category::ConfigValidation: return "config_validation";
      case Category::InvalidInput: return "invalid_input";
      case Category::Numeric: return "numeric";
      case Category::Io: return "io";
      case Category::Internal: return "internal";
    }
    return "internal";
  }

  int exit_code() const {
    switch (category_) {
      case Category::ConfigParse: return 3;
      case Category::ConfigValidation: return 4;
      case Category::InvalidInput: return 5;
      case Category::Numeric: return 6;
      case Category::Io: return 7;
      case Category::Internal: return 8;
    }
    return 8;
  }

private:
  Category category_;
};

[[noreturn]] inline void throw_config_parse(const std::string& msg) {
  throw Error(Error::Category::ConfigParse, msg);
}
[[noreturn]] inline void throw_config_validation(const std::string& msg) {
  throw Error(Error::Category::ConfigValidation, msg);
}
[[noreturn]] inline void throw_invalid_input(const std::string& msg) {
  throw Error(Error::Category::InvalidInput, msg);
}
[[noreturn]] inline void throw_numeric(const std::string& msg) {
  throw Error(Error::Category::Numeric, msg);
}
[[noreturn]] inline void throw_io(const std::string& msg) {
  throw Error(Error::Category::Io, msg);
}

}  // namespace grpolab
