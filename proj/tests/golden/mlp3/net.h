/* Generated by qnc 0.1.0 from network "mlp3". Do not edit: regenerating
 * from the same model and configuration reproduces this file byte for
 * byte. All values are two's-complement raw integers; an edge in
 * fixed<W,I> represents raw * 2^-(W-I). */
#ifndef QNC_mlp3_H
#define QNC_mlp3_H

#include <stdint.h>

#define mlp3_INPUT_SIZE 16
#define mlp3_OUTPUT_SIZE 5

/* input edge: fixed<16,6,rnd,sat>; output edge: fixed<18,2,rnd,sat> */
typedef int16_t mlp3_in_t;
typedef int32_t mlp3_out_t;

void mlp3_infer(const mlp3_in_t in[16], mlp3_out_t out[5]);

#endif
