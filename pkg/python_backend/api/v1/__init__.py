#api라우터 패키지