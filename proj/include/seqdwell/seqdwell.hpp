#pragma once

#include "certify.hpp"
#include "documents.hpp"
#include "dwell.hpp"
#include "errors.hpp"
#include "example.hpp"
#include "linalg.hpp"
#include "model.hpp"
#include "report.hpp"
#include "sim.hpp"
#include "synth.hpp"
