#include "nvsplit/core.hpp"

namespace nvsplit {

std::string_view to_string(ErrorKind kind)
{
    switch (kind) {
    case ErrorKind::Configuration: return "configuration";
    case ErrorKind::Argument: return "argument";
    case ErrorKind::Capability: return "capability";
    case ErrorKind::Overflow: return "numerical-overflow";
    case ErrorKind::Inconclusive: return "inconclusive";
    }
    return "unknown";
}

namespace {

std::string overflow_message(const std::string& where, long step, long path)
{
    std::string msg = "non-finite state in " + where;
    if (step >= 0) msg += " at step " + std::to_string(step);
    if (path >= 0) msg += " on path " + std::to_string(path);
    return msg;
}

} // namespace

OverflowError::OverflowError(const std::string& where, long step, long path)
    : Error(ErrorKind::Overflow, overflow_message(where, step, path)), where_(where), step_(step), path_(path)
{
}

} // namespace nvsplit
