# 추론 엔진 패키지: 텐서, 정수 커널, 계산 그래프, auto-tuner, Transformer 실행기
