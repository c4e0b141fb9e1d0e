#pragma once

#include "mcflab/checks.hpp"
#include "mcflab/flow.hpp"
#include "mcflab/forcing.hpp"
#include "mcflab/gaussian.hpp"
#include "mcflab/geometry.hpp"
#include "mcflab/graphs.hpp"
#include "mcflab/lemmas.hpp"
#include "mcflab/presets.hpp"
#include "mcflab/report.hpp"
#include "mcflab/runner.hpp"
#include "mcflab/scenario.hpp"
#include "mcflab/table.hpp"
