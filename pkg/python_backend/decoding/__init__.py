# 디코딩 패키지: 어휘, shortlist, 배치, 탐색, distillation 선택
