from fastapi import FastAPI
from fastapi.middleware.cors import CORSMiddleware

from app.api.routes import dyadic, markets, np_sets, pricing
from app.core.config import settings
from app.core.logging import configure_logging

configure_logging(settings.LOG_LEVEL)

app = FastAPI(title=settings.PROJECT_NAME)
app.add_middleware(
    CORSMiddleware,
    allow_origins=settings.CORS_ORIGINS,
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)


@app.get("/")
def read_root():
    return {"message": f"{settings.PROJECT_NAME} API is running", "schema_version": settings.OUTPUT_SCHEMA_VERSION}


app.include_router(markets.router)
app.include_router(pricing.router)
app.include_router(np_sets.router)
app.include_router(dyadic.router)
