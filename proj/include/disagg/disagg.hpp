#pragma once

#include "disagg/error.hpp"
#include "disagg/graph.hpp"
#include "disagg/disaggregate.hpp"
#include "disagg/spectral.hpp"
#include "disagg/precond.hpp"
