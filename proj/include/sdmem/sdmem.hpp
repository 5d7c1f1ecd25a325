#pragma once

#include <sdmem/core.hpp>
#include <sdmem/io.hpp>
#include <sdmem/memory.hpp>
#include <sdmem/solver.hpp>
#include <sdmem/analysis.hpp>
#include <sdmem/config.hpp>
#include <sdmem/cli.hpp>
