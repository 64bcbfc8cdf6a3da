#pragma once

#include "sepdict/certificate.hpp"
#include "sepdict/denoise.hpp"
#include "sepdict/descent.hpp"
#include "sepdict/errors.hpp"
#include "sepdict/io.hpp"
#include "sepdict/linalg.hpp"
#include "sepdict/meta.hpp"
#include "sepdict/objective.hpp"
#include "sepdict/oracle.hpp"
#include "sepdict/parallel.hpp"
#include "sepdict/random.hpp"
#include "sepdict/synth.hpp"
#include "sepdict/tensor.hpp"
