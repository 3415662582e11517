// implemented after the predictor stack
