#ifndef RRNN_ERROR_HPP_
#define RRNN_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace rrnn {

enum class ErrorCode {
    invalid_argument = 1,
    shape,
    empty_input,
    missing_field,
    out_of_range,
    no_head,
    parse,
    io,
    numeric,
};

// Every failure raised by the library carries one of the codes above so the
// C API can translate it without string matching.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(what), code_(code) { }

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace rrnn

#endif  // RRNN_ERROR_HPP_
