#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace zsm
{

// Geometry ---------------------------------------------------------------

// Raised when the LP backing a set query fails to terminate. Never means "empty".
class LpSolverError : public std::runtime_error
{
    public:
        using std::runtime_error::runtime_error;
};

class EmptySetError : public std::runtime_error
{
    public:
        using std::runtime_error::runtime_error;
};

// Zero-area (segment or point) outcome where a full-dimensional region is required.
class DegenerateRegionError : public std::runtime_error
{
    public:
        using std::runtime_error::runtime_error;
};

// A position query on an empty region.
class NoPositionError : public std::runtime_error
{
    public:
        using std::runtime_error::runtime_error;
};

// Positioning ------------------------------------------------------------

class DegenerateGeometryError : public std::runtime_error
{
    public:
        using std::runtime_error::runtime_error;
};

class LeastSquaresConvergenceError : public std::runtime_error
{
    public:
        LeastSquaresConvergenceError(const std::string& what, std::vector<double> step_norms)
            : std::runtime_error(what), step_norms_(std::move(step_norms))
        {
        }

        // step norm of each Gauss-Newton iteration, in meters
        const std::vector<double>& step_norms() const noexcept { return step_norms_; }

    private:
        std::vector<double> step_norms_;
};

// Learning ---------------------------------------------------------------

class TrainingError : public std::runtime_error
{
    public:
        using std::runtime_error::runtime_error;
};

class SvmConvergenceError : public TrainingError
{
    public:
        using TrainingError::TrainingError;
};

class UntrainedModelError : public std::logic_error
{
    public:
        using std::logic_error::logic_error;
};

// Orchestration ----------------------------------------------------------

class ConfigError : public std::runtime_error
{
    public:
        using std::runtime_error::runtime_error;
};

class FormatError : public std::runtime_error
{
    public:
        using std::runtime_error::runtime_error;
};

} // namespace zsm
